import numpy as np
import pytest

from ps3lab.errors import ModuliMismatch, SolverFailure
from ps3lab.membrane import build_membrane
from ps3lab.pantsgeom import associate_pants
from ps3lab.recon import conformal_map, reconstruct_u, sample_points, verify_pair
from ps3lab.spectral import solve_spectrum, u_values

from conftest import LAMBDA_B1, MATCHED_B1

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module", params=(1, 2))
def mapped(request, R_B1):
    m = request.param
    x, y = sample_points(R_B1, 64)
    spec = MATCHED_B1[m]
    bm = conformal_map(associate_pants(R_B1), build_membrane(spec), y=y, x=x)
    return m, bm, reconstruct_u(bm, "B1", "PB1")


def test_boundary_containment(mapped):
    _, bm, _ = mapped
    assert bm.containment["red"] < 1e-6
    assert bm.containment["green"] < 1e-5


def test_boundary_critical_points(mapped):
    _, bm, _ = mapped
    # the two critical points of p sit on the blue slot, outside [-1, 1]
    for z in (bm.y1, bm.y2):
        assert abs(z.imag) < 1e-12 and abs(z.real) > 1


def test_realness_and_agreement(mapped):
    _, _, rc = mapped
    assert rc.imag_ratio < 1e-6
    assert rc.alt_gap < 1e-8


def test_zero_count(mapped):
    # m1 + m2 + 1 zeros on [-1, 1] counting the two endpoints
    m, _, rc = mapped
    assert rc.zero_count + 2 == m + 1


def test_antisymmetrization_flips_sign(mapped):
    _, bm, _ = mapped
    mu = bm.spec.mu
    pp, pt = bm.p_plus, 1 / np.conj(bm.p_minus)
    f = lambda a, b: (a * b - mu * (a + b) + 1) / (a - b)
    assert np.max(np.abs(f(pt, pp) + f(pp, pt))) < 1e-10 * np.max(np.abs(f(pp, pt)))


def test_verify_against_direct_solver(mapped, R_B1):
    m, bm, rc = mapped
    spec = MATCHED_B1[m]
    rep = verify_pair(R_B1, spec.lam, rc.x, rc.u)
    assert rep["residual"] < 1e-3
    assert rep["lambda_rel_error"] < 1e-2
    assert rep["lambda_direct"] == pytest.approx(LAMBDA_B1[m - 1], rel=1e-10)
    assert rep["zero_count"] == rep["direct_zero_count"] == m - 1
    bad = verify_pair(R_B1, spec.lam * 1.05, rc.x, rc.u)
    assert bad["residual"] >= 10 * rep["residual"]


def test_direct_pair_closure(R_B1):
    sr = solve_spectrum(R_B1, 64)
    x, _ = sample_points(R_B1, 64)
    rep = verify_pair(R_B1, sr.eigenvalues[0], x, u_values(sr.eigenvectors[0], x), spectrum=sr)
    assert rep["lambda_rel_error"] == 0.0
    assert rep["residual"] < 1e-10


def test_wrong_membrane_is_rejected(R_B1):
    spec = MATCHED_B1[1].replace(h2=MATCHED_B1[1].h2 * 1.1)
    with pytest.raises(ModuliMismatch):
        conformal_map(associate_pants(R_B1), build_membrane(spec))


def test_refined_map_agrees(R_B1):
    p, atlas = associate_pants(R_B1), build_membrane(MATCHED_B1[1])
    x, y = sample_points(R_B1, 16)
    bm = conformal_map(p, atlas, y=y, x=x)
    bm2 = conformal_map(p, atlas, y=y, x=x, K=(160, 160))
    assert np.max(np.abs(bm2.p_plus - bm.p_plus) / (1 + np.abs(bm.p_plus))) < 1e-5


def test_unsupported_case(mapped):
    _, bm, _ = mapped
    with pytest.raises(SolverFailure):
        reconstruct_u(bm, "B21", "PB21")
