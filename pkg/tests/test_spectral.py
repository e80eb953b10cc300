import numpy as np
import pytest
from scipy.integrate import quad

from ps3lab.errors import OnSlot
from ps3lab.ratfun import MobiusReal, fixture, gauge_apply, poly_roots
from ps3lab.spectral import (_other_preimages, best_const_residual, cauchy_transform,
                             count_zeros, fit_coeffs, hilbert_block, kernel_block, nodes,
                             residual, rho, solve_spectrum, u_values)

from conftest import LAMBDA_B1


def basis(n):
    """sqrt(1-t^2) U_{n-1}(t) = sin(n arccos t)."""
    return lambda t: np.sin(n * np.arccos(t))


def pv_integral(f, x):
    """V.p. int_{-1}^{1} f(t)/(t-x) dt by QUADPACK's Cauchy weight."""
    return quad(f, -1, 1, weight="cauchy", wvar=x, limit=200, epsabs=1e-13, epsrel=1e-13)[0]


def cauchy_integral(f, z):
    g = lambda t: f(t) / (t - z)
    re = quad(lambda t: g(t).real, -1, 1, limit=200, epsabs=1e-13)[0]
    im = quad(lambda t: g(t).imag, -1, 1, limit=200, epsabs=1e-13)[0]
    return re + 1j * im


def test_hilbert_block_against_quadrature():
    N = 12
    x = nodes(N)
    H = hilbert_block(N, x)
    assert np.max(np.abs(H)) <= np.pi + 1e-15
    assert abs(hilbert_block(1, np.array([0.0]))[0, 0]) < 1e-15
    for i in (0, 3, 7):
        for n in (1, 2, 5, 11):
            assert abs(H[i, n - 1] - pv_integral(basis(n), x[i])) < 1e-8


def test_rho_branch(rng):
    z = rng.normal(size=1000) * 3 + 1j * rng.normal(size=1000) * 3
    assert np.all(np.abs(rho(z)) < 1)
    assert abs(rho(2.0) - (2 - np.sqrt(3))) < 1e-15


def test_kernel_block_against_quadrature(R_A, rng):
    N = 10
    x = nodes(N)
    K = kernel_block(R_A, N, x)
    poles = poly_roots(np.trim_zeros(np.array(R_A.den), "b"))
    for _ in range(5):
        i, n = int(rng.integers(len(x))), int(rng.integers(1, N + 1))
        f = basis(n)
        val = pv_integral(f, x[i])
        for z in _other_preimages(R_A, x[i]):
            if np.isfinite(z):
                val += cauchy_integral(f, z)
        for q in poles:
            val -= cauchy_integral(f, q)
        assert abs(K[i, n - 1] - val.real) < 1e-7


@pytest.mark.parametrize("case", ("A", "B1"))
def test_spectrum_real_and_in_range(case):
    sr = solve_spectrum(fixture(case), 64)
    assert len(sr) >= 3
    assert np.all((sr.eigenvalues > 0) & (sr.eigenvalues < 3))
    assert np.all(sr.residuals < 1e-6)


def test_spectrum_b1_frozen(R_B1):
    sr = solve_spectrum(R_B1, 64)
    assert sr.eigenvalues[:2] == pytest.approx(LAMBDA_B1, rel=1e-10)
    assert [count_zeros(c) for c in sr.eigenvectors[:2]] == [0, 1]


def test_zero_counts_of_A(R_A):
    # golden sequence from the N=64 solve: consecutive integers from 0
    sr = solve_spectrum(R_A, 64)
    z = [count_zeros(c) for c in sr.eigenvectors]
    assert z[:6] == [0, 1, 2, 3, 4, 5]


def test_tail_approaches_one(R_A):
    gaps = np.abs(solve_spectrum(R_A, 128).eigenvalues - 1)
    assert np.all(np.diff(gaps[-5:]) < 0)


def test_refinement_stable(R_A):
    a = solve_spectrum(R_A, 64).eigenvalues[:3]
    b = solve_spectrum(R_A, 128).eigenvalues[:3]
    assert np.max(np.abs(a - b)) < 1e-8


def test_gauge_invariance(R_A):
    base = solve_spectrum(R_A, 64).eigenvalues[:4]
    for L, side in ((MobiusReal(0.3, 1), "pre"), (MobiusReal(-0.2, -1), "post")):
        other = solve_spectrum(gauge_apply(R_A, L, side), 64).eigenvalues[:4]
        assert np.max(np.abs(other - base)) < 1e-6


def test_residual_basics(R_B1):
    c = np.zeros(16)
    assert residual(R_B1, 1.5, c, 0.0) == 0.0
    sr = solve_spectrum(R_B1, 64)
    c0 = sr.eigenvectors[0]
    assert residual(R_B1, sr.eigenvalues[0], c0, sr.const_values[0]) < 1e-6
    bad = np.random.default_rng(1).normal(size=64)
    assert best_const_residual(R_B1, 1.5, bad)[0] > 1e-2


def test_count_zeros_basis():
    assert count_zeros(np.array([1.0, 0, 0])) == 0
    assert count_zeros(np.array([0.0, 1.0, 0])) == 1


def test_fit_coeffs_recovers():
    c = np.array([1.0, -0.3, 0.2, 0.05])
    t = np.cos(np.linspace(0.01, np.pi - 0.01, 50))
    assert np.allclose(fit_coeffs(t, u_values(c, t), 4), c)


def test_plemelj_jump(R_B1):
    c = solve_spectrum(R_B1, 64).eigenvectors[0]
    t = np.linspace(-0.95, 0.95, 21)
    eps = 1e-6
    jump = np.array([cauchy_transform(c, x + 1j * eps) - cauchy_transform(c, x - 1j * eps)
                     for x in t])
    u = u_values(c, t)
    assert np.max(np.abs(jump - 2j * np.pi * u)) < 1e-4 * np.max(np.abs(2 * np.pi * u))


def test_cauchy_transform_decay_and_slot():
    c = np.array([1.0, 0.5])
    assert abs(cauchy_transform(c, 1e8, 0.25) - 0.25) < 1e-7
    with pytest.raises(OnSlot):
        cauchy_transform(c, 0.2)
