"""Direct Chebyshev discretization of the PS-3 eigenproblem

    lam * Vp int u(t)/(t-x) dt - Vp int u(t) R'(t)/(R(t)-R(x)) dt = const.

The unknown is expanded as u(t) = sqrt(1-t^2) * sum_n c_n U_{n-1}(t), which
makes both singular integrals closed form:

    Vp int sqrt(1-t^2) U_{n-1}(t)/(t-x) dt = -pi T_n(x),      x in (-1, 1)
       int sqrt(1-t^2) U_{n-1}(t)/(t-z) dt = -pi rho(z)^n,    z off [-1, 1]

with rho(z) = z - sqrt(z^2-1) on the branch |rho| < 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NoConvergence, OnSlot, PreimageOnSlot
from .ratfun import RationalDeg3, is_real, poly_roots, preimages, _trim


def rho(z):
    """z - sqrt(z^2-1) on the branch with modulus below one."""
    z = np.asarray(z, dtype=complex)
    s = np.sqrt(z - 1) * np.sqrt(z + 1)
    r1, r2 = z - s, z + s
    return np.where(np.abs(r1) <= np.abs(r2), r1, r2)


def nodes(N):
    """N+1 first-kind Chebyshev points, interior to (-1, 1)."""
    k = np.arange(N + 1)
    return np.cos((2 * k + 1) * np.pi / (2 * (N + 1)))


def cheb_T(n_max, x):
    """Matrix of T_n(x_i), n = 1..n_max."""
    x = np.asarray(x, dtype=float)
    th = np.arccos(np.clip(x, -1, 1))
    n = np.arange(1, n_max + 1)
    return np.cos(np.outer(th, n))


def hilbert_block(N, x=None):
    x = nodes(N) if x is None else x
    return -np.pi * cheb_T(N, x)


def cauchy_powers(N, z):
    """Row vector int u_n(t)/(t-z) dt = -pi rho(z)^n for one point z."""
    if np.isinf(z):
        return np.zeros(N, dtype=complex)
    r = complex(rho(z))
    return -np.pi * r ** np.arange(1, N + 1)


def _other_preimages(R, x):
    roots = preimages(R, complex(R(x)))
    j = int(np.argmin([abs(z - x) if np.isfinite(z) else np.inf for z in roots]))
    return [z for i, z in enumerate(roots) if i != j]


def pole_functional(R: RationalDeg3, N):
    """Row vector of int u_n(t) Q'(t)/Q(t) dt."""
    out = np.zeros(N, dtype=complex)
    for q in poly_roots(_trim(R.den)):
        out += cauchy_powers(N, q)
    return out


def kernel_block(R: RationalDeg3, N, x=None, return_parts=False):
    x = nodes(N) if x is None else np.asarray(x, dtype=float)
    H = hilbert_block(N, x)
    extra = np.zeros((len(x), N), dtype=complex)
    for i, xi in enumerate(x):
        for z in _other_preimages(R, xi):
            if np.isfinite(z) and is_real(z) and -1 <= z.real <= 1:
                raise PreimageOnSlot(f"z={z} on [-1,1] for x={xi}")
            extra[i] += cauchy_powers(N, z)
    qf = pole_functional(R, N)
    block = H + extra - qf[None, :]
    if np.max(np.abs(block.imag)) > 1e-8 * (1 + np.max(np.abs(block.real))):
        raise NoConvergence("kernel block has a non-negligible imaginary part")
    if return_parts:
        return block.real, H, extra.real, qf.real
    return block.real


def u_values(coeffs, t):
    """u(t) = sqrt(1-t^2) sum c_n U_{n-1}(t) = sum c_n sin(n theta)."""
    t = np.asarray(t, dtype=float)
    th = np.arccos(np.clip(t, -1, 1))
    n = np.arange(1, len(coeffs) + 1)
    return np.sin(np.outer(th, n)) @ np.asarray(coeffs)


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: list
    residuals: np.ndarray
    const_values: np.ndarray
    N: int
    discarded: dict = field(default_factory=dict)
    imag: np.ndarray = None         # imaginary parts of the kept raw eigenvalues

    def __len__(self):
        return len(self.eigenvalues)


LAMBDA_WINDOW = (1e-4, 3 - 1e-4)
IMAG_TOL = 1e-6
ACCUMULATION_TOL = 1e-11


def residual(R: RationalDeg3, lam, coeffs, const, x=None):
    """Sup-norm of lam*(Hu) - (Ku) - const over 4N off-grid points."""
    coeffs = np.asarray(coeffs, dtype=float)
    N = len(coeffs)
    if x is None:
        x = np.cos((np.arange(4 * N) + 0.37) * np.pi / (4 * N))
    H = hilbert_block(N, x)
    K = kernel_block(R, N, x)
    return float(np.max(np.abs(lam * (H @ coeffs) - K @ coeffs - const)))


def solve_spectrum(R: RationalDeg3, N=64, window=LAMBDA_WINDOW, certify=True):
    """Eigenpairs of the collocated problem with const as an extra unknown.

    Eigenvalues within ACCUMULATION_TOL of the accumulation point 1 sit at
    rounding level and are dropped alongside complex ones. The rest are
    returned in order of decreasing |lam - 1|, so the tail approaches 1.
    """
    if N < 8:
        raise ValueError("N must be at least 8")
    x = nodes(N)
    H = hilbert_block(N, x)
    K = kernel_block(R, N, x)
    A = np.hstack([K, np.ones((N + 1, 1))])
    B = np.hstack([H, np.zeros((N + 1, 1))])
    try:
        w, v = scipy.linalg.eig(A, B)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NoConvergence(str(exc)) from exc
    keep, dropped = [], {"infinite": 0, "complex": 0, "window": 0, "accumulation": 0}
    for j, lam in enumerate(w):
        if not np.isfinite(lam):
            dropped["infinite"] += 1
        elif abs(lam.imag) >= IMAG_TOL:
            dropped["complex"] += 1
        elif not window[0] < lam.real < window[1]:
            dropped["window"] += 1
        elif abs(lam.real - 1) < ACCUMULATION_TOL:
            dropped["accumulation"] += 1
        else:
            keep.append(j)
    keep.sort(key=lambda j: -abs(w[j].real - 1))
    lams, vecs, consts, res = [], [], [], []
    for j in keep:
        vec = v[:, j]
        vec = vec / vec[np.argmax(np.abs(vec[:N]))]
        c, k = vec[:N].real, vec[N].real
        scale = np.max(np.abs(u_values(c, np.cos(np.linspace(0, np.pi, 4 * N)))))
        c, k = c / scale, k / scale
        lams.append(w[j].real)
        vecs.append(c)
        consts.append(k)
        res.append(residual(R, w[j].real, c, k) if certify else np.nan)
    return SpectrumResult(np.array(lams), vecs, np.array(res), np.array(consts), N, dropped,
                          np.array([w[j].imag for j in keep]))


def count_zeros(coeffs, npts=None):
    N = len(coeffs)
    npts = 10 * N if npts is None else npts
    th = np.linspace(0, np.pi, npts + 2)[1:-1]
    u = u_values(coeffs, np.cos(th))
    s = np.sign(u)
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


def const_star(R: RationalDeg3, lam, coeffs, const):
    """Additive constant of the Cauchy transform that cancels constant terms."""
    I = float(np.real(pole_functional(R, len(coeffs)) @ coeffs))
    return (I - const) / (lam - 3.0)


def cauchy_transform(coeffs, x, cstar=0.0):
    """Phi(x) = int u(t)/(t-x) dt + const*, for x off [-1,1]."""
    x = complex(x)
    if abs(x.imag) == 0 and -1 <= x.real <= 1:
        raise OnSlot("x lies on [-1,1]")
    return complex(cauchy_powers(len(coeffs), x) @ np.asarray(coeffs)) + cstar


def fit_coeffs(x, u, N):
    """Least-squares projection of samples u(x) onto the weighted U basis."""
    th = np.arccos(np.clip(np.asarray(x, dtype=float), -1, 1))
    A = np.sin(np.outer(th, np.arange(1, N + 1)))
    c, *_ = np.linalg.lstsq(A, np.asarray(u, dtype=float), rcond=None)
    return c


def best_const_residual(R, lam, coeffs, x=None):
    """Residual with const chosen optimally (the mean of the defect)."""
    coeffs = np.asarray(coeffs, dtype=float)
    N = len(coeffs)
    if x is None:
        x = np.cos((np.arange(4 * N) + 0.37) * np.pi / (4 * N))
    d = lam * (hilbert_block(N, x) @ coeffs) - kernel_block(R, N, x) @ coeffs
    k = 0.5 * (d.max() + d.min())
    return float(np.max(np.abs(d - k))), float(k)
