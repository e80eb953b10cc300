"""Conformal map from real-slit pants to a membrane, and the eigenfunction
it encodes.

Both the pants and the membrane chart are sent to the same circular-slit
annulus: with V harmonic, 0 on the red oval, 1 on the green one and
floating on the blue one,

    G = exp(2 pi (V + i V*) / Phi),    Phi = flux of V through red,

maps onto 1 < |G| < exp(2 pi / Phi) minus a concentric arc.  Equal moduli
make the two targets congruent up to a rotation, so

    p(y) = G_M^{-1}(e^{i phi} G_P(y)).

The eigenfunction is then read off the banks of the red slot [-1, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import BranchFailure, MapDegenerate, ModuliMismatch, SolverFailure
from .harmonic import Domain
from .moduli import membrane_domain, moduli_of_membrane, moduli_of_slit_pants, slit_domain
from .pantsgeom import RealSlitPants
from .ratfun import RationalDeg3
from .spectral import best_const_residual, count_zeros, fit_coeffs, solve_spectrum, u_values

N_ARC = 2048
N_TABLE = 4096


def _unwrap_to(ref, a):
    """Representative of angle a nearest to ref."""
    return ref + np.angle(np.exp(1j * (np.asarray(a) - ref)))


@dataclass
class SlitMap:
    """Circular-slit map of a harmonic domain whose ovals are grouped
    components; ``coeffs`` combines the basis into V + i V*."""

    domain: Domain
    groups: list
    labels: tuple
    coeffs: np.ndarray
    scale: float            # 2 pi / Phi
    blue_level: float       # V on the floating oval
    residual: float

    def oval(self, color):
        return self.groups[[l.rstrip("12") for l in self.labels].index(color)]

    def F(self, z):
        return self.scale * (self.domain.potential_matrix(z) @ self.coeffs)

    def dF(self, z):
        return self.scale * (self.domain.derivative_matrix(z) @ self.coeffs)

    def G(self, z):
        return np.exp(self.F(z))

    def dG(self, z):
        return self.G(z) * self.dF(z)

    def G_bank(self, i, s, side):
        return np.exp(self.scale * (self.domain.bank_matrix(i, s, side) @ self.coeffs))

    def dG_bank(self, i, s, side):
        dF = self.scale * (self.domain.bank_matrix(i, s, side, derivative=True) @ self.coeffs)
        return self.G_bank(i, s, side) * dF

    @property
    def outer_radius(self):
        return math.exp(self.scale)

    @property
    def arc_radius(self):
        return math.exp(self.scale * self.blue_level)


def circular_slit_map(domain: Domain, groups, labels) -> SlitMap:
    colors = [l.rstrip("12") for l in labels]
    if sorted(colors) != ["blue", "green", "red"]:
        raise SolverFailure(f"circular-slit map needs one oval of each color, got {labels}")
    nc = len(domain.components)
    red, green, blue = (groups[colors.index(c)] for c in ("red", "green", "blue"))
    rhs = np.zeros((nc, 2))
    rhs[green, 0] = 1.0
    rhs[blue, 1] = 1.0
    sol = domain.solve(rhs)
    flux = sol.fluxes()
    t = -flux[blue, 0].sum() / flux[blue, 1].sum()
    coeffs = sol.coeffs[:, 0] + t * sol.coeffs[:, 1]
    phi = abs(flux[red, 0].sum() + t * flux[red, 1].sum())
    if not np.isfinite(phi) or phi <= 0:
        raise SolverFailure("degenerate condenser flux")
    return SlitMap(domain, list(groups), tuple(labels), coeffs, 2 * math.pi / phi, float(t),
                   sol.residual)


# ------------------------------------------------------------ bank param

def _circle_params(n):
    """tau in [0, 2 pi): s = -cos tau, side +1 for tau < pi (positive traversal)."""
    tau = 2 * np.pi * (np.arange(n) + 0.5) / n
    return tau, -np.cos(tau), np.where(tau < np.pi, 1, -1)


def _arg_on_slit(sm: SlitMap, i, tau):
    tau = np.atleast_1d(tau) % (2 * np.pi)
    s = -np.cos(tau)
    out = np.empty(len(tau))
    for side in (1, -1):
        sel = (tau < np.pi) == (side == 1)
        if np.any(sel):
            out[sel] = np.angle(sm.G_bank(i, s[sel], side))
    return out


def _arc_extremes(sm: SlitMap, i, n=N_ARC):
    """Angles (lo, hi) of the arc image of slit i and the tau of each fold."""
    tau, _, _ = _circle_params(n)
    a = np.unwrap(_arg_on_slit(sm, i, tau))
    out = {}
    for key, sgn in (("hi", 1.0), ("lo", -1.0)):
        j = int(np.argmax(sgn * a))
        h = 2 * np.pi / n
        f = lambda t, j=j, sgn=sgn: -sgn * _unwrap_to(a[j], _arg_on_slit(sm, i, t)[0])
        r = minimize_scalar(f, bounds=(tau[j] - h, tau[j] + h), method="bounded",
                            options={"xatol": 1e-12})
        out[key] = (float(-sgn * r.fun), float(r.x) % (2 * np.pi))
    return out["lo"], out["hi"]


# ------------------------------------------------------------ boundary map

@dataclass
class BoundaryMap:
    """Samples of p(y) and p'(y) on both banks of the red slot."""

    y: np.ndarray
    x: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    dp_plus: np.ndarray
    dp_minus: np.ndarray
    y1: complex
    y2: complex
    branch_points: tuple
    spec: object
    rotation: float
    containment: dict
    arcs: dict
    K: tuple
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {"spec": self.spec.to_json(), "y1": [self.y1.real, self.y1.imag],
                "y2": [self.y2.real, self.y2.imag], "rotation": self.rotation,
                "containment": self.containment, "arcs": self.arcs, "K": list(self.K)}


def _pants_side(source: RealSlitPants, K):
    D, labels, chart, q = slit_domain(source, K)
    return circular_slit_map(D, [[0], [1], [2]], labels), chart, q


def _invert_on_circle(sm: SlitMap, radius, target, n=N_TABLE, newton=6):
    """zeta with G(zeta) = target, started from the circle |zeta| = radius."""
    th = 2 * np.pi * np.arange(n + 1) / n
    psi = np.unwrap(np.angle(sm.G(radius * np.exp(1j * th))))
    if psi[-1] < psi[0]:
        th, psi = th[::-1], psi[::-1]
    if abs(abs(psi[-1] - psi[0]) - 2 * np.pi) > 1e-6:
        raise MapDegenerate("boundary circle does not wind once under G")
    a = psi[0] + np.mod(np.angle(target) - psi[0], 2 * np.pi)
    zeta = radius * np.exp(1j * np.interp(a, psi, th))
    for _ in range(newton):
        g, dg = sm.G(zeta), sm.dG(zeta)
        zeta = zeta - (g - target) / dg
    err = float(np.max(np.abs(sm.G(zeta) - target)))
    if err > 1e-8:
        raise MapDegenerate(f"inverse map did not converge ({err:.2e})")
    return zeta


def _circle_of(chart, color):
    if chart.inner_color == color:
        return chart.rin, chart.inner
    return 1.0, chart.outer


def _containment(circ, p):
    """Distance of p from a circle; chordally scaled for lines through infinity."""
    d = np.abs(circ.signed(p))
    if circ.is_line:
        d = d / (1 + np.abs(p - circ.center))
    return float(np.max(d))


def _pass_sign(sm: SlitMap, i, end, eta=1e-8):
    """+1 when arg G increases through the slit end s=end in positive traversal."""
    s = np.array([end * (1 - eta)])
    before, after = (1, -1) if end > 0 else (-1, 1)
    a0 = np.angle(sm.G_bank(i, s, before))[0]
    a1 = np.angle(sm.G_bank(i, s, after))[0]
    return 1.0 if np.angle(np.exp(1j * (a1 - a0))) > 0 else -1.0


def _preimage_on_pass(sm: SlitMap, i, target_arg, sign, folds):
    """tau on slit i where arg G = target_arg on the pass of the given sign."""
    (alo, tlo), (ahi, thi) = folds
    t_start, t_end = (tlo, thi) if sign > 0 else (thi, tlo)
    if t_end < t_start:
        t_end += 2 * np.pi
    mid = 0.5 * (alo + ahi)

    def f(t):
        return _unwrap_to(mid, _arg_on_slit(sm, i, t)[0]) - _unwrap_to(mid, target_arg)

    fa, fb = f(t_start + 1e-12), f(t_end - 1e-12)
    if fa * fb > 0:
        raise MapDegenerate("critical point not bracketed on the blue bank")
    return brentq(f, t_start + 1e-12, t_end - 1e-12, xtol=1e-14) % (2 * np.pi)


def conformal_map(source: RealSlitPants, atlas, y=None, x=None, K=None,
                  match_tol=1e-5, details=None) -> BoundaryMap:
    """Color-respecting conformal map of ``source`` onto a single-chart atlas,
    sampled on both banks of the red slot at the real points ``y``."""
    if len(atlas.charts) != 1 or atlas.quotient is not None:
        raise SolverFailure("conformal maps are implemented for single-chart A/B1 membranes")
    tp, dp = moduli_of_slit_pants(source, return_details=True, K=None if K is None else K[0])
    tm, dm = moduli_of_membrane(atlas, return_details=True, K=None if K is None else K[1])
    gap = tp.distance(tm)
    if gap > match_tol:
        raise ModuliMismatch(f"moduli differ by {gap:.2e}")
    kp, km = dp["history"][-1][0], dm["history"][-1][0]
    P, chart_p, q = _pants_side(source, kp)
    Dm, groups, labels = membrane_domain(atlas, km)
    M = circular_slit_map(Dm, groups, labels)
    ch = atlas.charts[0]

    ib_p, ib_m = P.oval("blue")[0], M.oval("blue")[0]
    folds_p, folds_m = _arc_extremes(P, ib_p), _arc_extremes(M, ib_m)
    width_p = folds_p[1][0] - folds_p[0][0]
    width_m = folds_m[1][0] - folds_m[0][0]
    mid_p = 0.5 * (folds_p[0][0] + folds_p[1][0])
    mid_m = 0.5 * (folds_m[0][0] + folds_m[1][0])
    rot = float(np.angle(np.exp(1j * (mid_m - mid_p))))
    arcs = {"pants": [folds_p[0][0], folds_p[1][0], P.arc_radius, P.outer_radius],
            "membrane": [folds_m[0][0], folds_m[1][0], M.arc_radius, M.outer_radius],
            "width_gap": abs(width_p - width_m)}
    if abs(width_p - width_m) > 1e3 * match_tol or abs(P.scale - M.scale) > 1e3 * match_tol * M.scale:
        raise ModuliMismatch(f"circular-slit targets differ: {arcs}")

    # red banks
    red_p = P.oval("red")[0]
    slot = P.domain.components[red_p]
    if y is None:
        y = np.cos(np.pi * (np.arange(256) + 0.5) / 256)[::-1]
    y = np.asarray(y, dtype=float)
    qy = np.array([chart_p(t) for t in y])
    dq = chart_p.det / (chart_p.c * y + chart_p.d) ** 2
    s = ((qy - slot.mid) / slot.half).real
    if np.any(np.abs(s) >= 1):
        raise ValueError("sample points must lie inside the red slot")
    up = 1 if chart_p.det > 0 else -1
    rad_r, circ_r = _circle_of(ch, "red")
    vals = {}
    for name, side in (("plus", up), ("minus", -up)):
        T = np.exp(1j * rot) * P.G_bank(red_p, s, side)
        dT = np.exp(1j * rot) * P.dG_bank(red_p, s, side) * dq
        zeta = _invert_on_circle(M, rad_r, T)
        pv = ch.project(zeta)
        dpv = ch.dproject(zeta) * dT / M.dG(zeta)
        vals[name] = (pv, dpv, zeta)
    red_err = max(_containment(circ_r, vals[k][0]) for k in vals)

    # green banks, as an independent containment check
    green_p = P.oval("green")[0]
    tau, sg, sides = _circle_params(256)
    rad_g, circ_g = _circle_of(ch, "green")
    green_err = 0.0
    for side in (1, -1):
        sel = sides == side
        T = np.exp(1j * rot) * P.G_bank(green_p, sg[sel], side)
        zeta = _invert_on_circle(M, rad_g, T)
        green_err = max(green_err, _containment(circ_g, ch.project(zeta)))

    # boundary critical points: preimages of the membrane slot ends
    crit = []
    for end in (-1.0, 1.0):
        A = M.G_bank(ib_m, np.array([end]), 1)[0]
        sign = _pass_sign(M, ib_m, end)
        t = _preimage_on_pass(P, ib_p, np.angle(A) - rot, sign, folds_p)
        sq = -math.cos(t)
        qpt = P.domain.components[ib_p].param(sq)
        crit.append(complex(chart_p.inverse()(float(np.real(qpt)))))
    y1, y2 = sorted(crit, key=lambda z: z.real)

    small = min(np.min(np.abs(vals[k][1])) for k in vals)
    if small < 1e-10 * max(np.median(np.abs(vals[k][1])) for k in vals):
        raise MapDegenerate("p' vanishes on the red banks")
    ends = tuple(e for sl in source.slots for e in (sl.lo, sl.hi) if np.isfinite(e))
    info = {"moduli_gap": gap, "residuals": [P.residual, M.residual],
            "zeta_plus": vals["plus"][2], "zeta_minus": vals["minus"][2]}
    return BoundaryMap(y, x if x is not None else y, vals["plus"][0], vals["minus"][0],
                       vals["plus"][1], vals["minus"][1], y1, y2, ends, atlas.spec, rot,
                       {"red": red_err, "green": green_err}, arcs, (kp, km), info)


def sample_points(R: RationalDeg3, N=64):
    """x at 8N Chebyshev points and y = R(x), ascending in x."""
    n = 8 * N
    x = np.cos(np.pi * (np.arange(n) + 0.5) / n)[::-1]
    return x, np.array([float(np.real(R(t))) for t in x])


# ------------------------------------------------------------ eigenfunction

@dataclass
class Reconstruction:
    x: np.ndarray
    u: np.ndarray
    u_alt: np.ndarray          # restoration through the pair p, 1/conj(p(conj y))
    imag_ratio: float
    alt_gap: float
    zero_count: int
    sign_changes: list


def _continuous_sqrt(z, max_turn=1.0):
    """Square root of z along the samples, continuous from the first one."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(np.angle(z[1:] / z[:-1])) > max_turn):
        raise BranchFailure("square-root branch cannot be tracked along the samples")
    half = 0.5 * np.unwrap(np.angle(z))
    return np.sqrt(np.abs(z)) * np.exp(1j * half)


def _realify(u):
    th = 0.5 * np.angle(np.sum(u * u))
    v = u * np.exp(-1j * th)
    ratio = float(np.max(np.abs(v.imag)) / np.max(np.abs(v.real)))
    v = v.real
    first = v[np.argmax(np.abs(v) > 1e-3 * np.max(np.abs(v)))]
    v = v * (np.sign(first) / np.max(np.abs(v)))
    return v, ratio


def _sign_changes(u, x):
    s = np.sign(u)
    idx = [k for k in range(len(u) - 1) if s[k] != 0 and s[k + 1] != 0 and s[k] != s[k + 1]]
    return [float(x[k] - u[k] * (x[k + 1] - x[k]) / (u[k + 1] - u[k])) for k in idx]


def reconstruct_u(bm: BoundaryMap, case="B1", fashion="PB1") -> Reconstruction:
    """u on [-1,1] from the top branch of the restoration formula."""
    if case not in ("A", "B1"):
        raise SolverFailure("reconstruction is implemented for the A and B1 cases")
    y = bm.y
    w2 = np.ones(len(y), dtype=complex)
    for e in bm.branch_points:
        w2 = w2 * (y - e)
    w = _continuous_sqrt(w2)
    S = _continuous_sqrt((y - bm.y1) * (y - bm.y2) / (bm.dp_plus * bm.dp_minus))
    u, ratio = _realify(S * (bm.p_plus - bm.p_minus) / w)
    mu = bm.spec.mu
    pp, pm = bm.p_plus, 1 / np.conj(bm.p_minus)
    u_alt, _ = _realify((pp * pm - mu * (pp + pm) + 1) / (pp - pm))
    gap = float(min(np.max(np.abs(u - u_alt)), np.max(np.abs(u + u_alt))))
    zs = _sign_changes(u, bm.x)
    return Reconstruction(bm.x, u, u_alt, ratio, gap, len(zs), zs)


def verify_pair(R: RationalDeg3, lam, x, u, N=64, spectrum=None):
    """Project u onto the spectral basis and compare with the direct solver."""
    x, u = np.asarray(x, dtype=float), np.asarray(u, dtype=float)
    c = fit_coeffs(x, u, N)
    fit_err = float(np.max(np.abs(u_values(c, x) - u)))
    norm = float(np.max(np.abs(u)))
    res, const = best_const_residual(R, lam, c)
    report = {"lambda": float(lam), "N": N, "fit_error": fit_err / norm,
              "residual": res / norm, "const": const, "zero_count": count_zeros(c)}
    try:
        sr = spectrum if spectrum is not None else solve_spectrum(R, N)
        j = int(np.argmin(np.abs(sr.eigenvalues - lam)))
        ld = float(sr.eigenvalues[j])
        report.update({"lambda_direct": ld, "lambda_rel_error": abs(lam - ld) / abs(ld),
                       "direct_zero_count": count_zeros(sr.eigenvectors[j])})
    except Exception as exc:          # the report is always produced
        report.update({"lambda_direct": None, "direct_error": str(exc)})
    return report
