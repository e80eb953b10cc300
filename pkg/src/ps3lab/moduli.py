"""Conformal moduli of colored pants and the matcher for (lambda, h1, h2).

The modulus attached to a pair of ovals (i, j) is the extremal distance
1/cap_ij, where cap_ij is the Dirichlet energy of the potential equal to 0
on i, 1 on j, and constant with zero net flux on the third oval k.  With
x_ab = -P_ab the off-diagonal entries of the period matrix,

    cap_ij = x_ij + x_ik x_jk / (x_ik + x_jk).

For a round annulus r < |z| < 1 with a vanishing third oval this tends to
log(1/r) / (2 pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoRoot, PS3Error, SolverFailure
from .harmonic import Domain, StraightSlit
from .pantsgeom import RealMobius, RealSlitPants
from .ratfun import angle, arc_midpoint, ccw

PAIR_ORDER = (("red", "green"), ("green", "blue"), ("blue", "red"))


@dataclass(frozen=True)
class ModuliTriple:
    """Extremal distances for the oval pairs (0,1), (1,2), (2,0) of
    ``labels``.  Labels are colors; a repeated color gets suffix 1 and 2."""

    labels: tuple
    values: tuple

    def as_array(self):
        return np.array(self.values, dtype=float)

    def distance(self, other):
        """Max relative deviation, minimized over exchanging equal colors."""
        a = self.as_array()
        best = np.inf
        for o in (other, other.swapped()):
            b = o.aligned(self.labels).as_array()
            best = min(best, float(np.max(np.abs(a - b) / np.abs(a))))
        return best

    def aligned(self, labels):
        """The same triple read in another label order."""
        if tuple(labels) == tuple(self.labels):
            return self
        d = {}
        for k, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
            d[frozenset((self.labels[i], self.labels[j]))] = self.values[k]
        vals = tuple(d[frozenset((labels[i], labels[j]))] for i, j in ((0, 1), (1, 2), (2, 0)))
        return ModuliTriple(tuple(labels), vals)

    def swapped(self):
        """Exchange the two same-colored ovals (no-op without duplicates)."""
        l0, l1, l2 = self.labels
        ren = {}
        for a, b in ((l0, l1), (l1, l2), (l0, l2)):
            if a[:-1] == b[:-1] and a[-1:] in "12" and b[-1:] in "12":
                ren = {a: b, b: a}
        if not ren:
            return self
        new = tuple(ren.get(x, x) for x in self.labels)
        return ModuliTriple(self.labels, ModuliTriple(new, self.values).aligned(self.labels).values)

    def to_json(self):
        return {"labels": list(self.labels), "values": list(self.values)}


def capacities_from_period(P):
    """Floating-third capacities for pairs (0,1), (1,2), (2,0)."""
    P = np.asarray(P, dtype=float)
    x = -0.5 * (P + P.T)
    out = []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        k = 3 - i - j
        out.append(x[i, j] + x[i, k] * x[j, k] / (x[i, k] + x[j, k]))
    return np.array(out)


def oval_labels(colors):
    """Unique labels for a color list, duplicates numbered in given order."""
    out = []
    for c in colors:
        if colors.count(c) > 1:
            out.append(f"{c}{sum(1 for x in out if x.startswith(c)) + 1}")
        else:
            out.append(c)
    return tuple(out)


def canonical_labels(labels):
    """Reference order: red, green, blue; duplicates keep their numbering."""
    rank = {"red": 0, "green": 1, "blue": 2}
    return tuple(sorted(labels, key=lambda s: (rank[s.rstrip("12")], s)))


def triple_from_period(P, labels):
    caps = capacities_from_period(P)
    if np.any(caps <= 0) or not np.all(np.isfinite(caps)):
        raise SolverFailure(f"non-positive capacities {caps}")
    t = ModuliTriple(tuple(labels), tuple(float(v) for v in 1.0 / caps))
    return t.aligned(canonical_labels(labels))


def _finite_chart(p: RealSlitPants):
    """A real Moebius map sending the pants to finite slots inside [-1,1]."""
    cyc = p.cyclic()
    gaps = [(cyc[k].hi, cyc[(k + 1) % 3].lo) for k in range(3)]
    lo, hi = max(gaps, key=lambda g: ccw(*g))
    g = arc_midpoint(lo, hi)
    inv = RealMobius(0.0, 1.0, 1.0, -g) if not math.isinf(g) else RealMobius(1.0, 0.0, 0.0, 1.0)
    pts = [inv(x) for s in cyc for x in (s.lo, s.hi)]
    a, b = min(pts), max(pts)
    lin = RealMobius(2.0 / (b - a), -(a + b) / (b - a), 0.0, 1.0)
    return lin @ inv


def _slot_labels(slots):
    """Labels for slots in cyclic order; duplicates are numbered starting
    from the slot that follows the unique color positively."""
    colors = [sl.color for sl in slots]
    uniq = next(k for k, c in enumerate(colors) if colors.count(c) == 1)
    out = [None] * 3
    count = {}
    for step in range(3):
        k = (uniq + step) % 3
        c = colors[k]
        if colors.count(c) > 1:
            count[c] = count.get(c, 0) + 1
            out[k] = f"{c}{count[c]}"
        else:
            out[k] = c
    return tuple(out)


def slit_domain(p: RealSlitPants, K=48):
    """Harmonic domain for the pants in a finite chart, plus labels and chart map."""
    m = _finite_chart(p)
    q = p.mapped(m)
    comps = []
    for s in q.cyclic():
        if s.lo > s.hi:
            raise SolverFailure("slot still crosses infinity after normalization")
        comps.append(StraightSlit(s.lo, s.hi, K=K))
    return Domain(comps), _slot_labels(q.cyclic()), m, q


K_LADDER = (48, 96, 160, 240, 320, 400, 520)


def moduli_of_slit_pants(p: RealSlitPants, tol=1e-9, K=None, return_details=False):
    """Moduli triple of real-slit pants.  Without ``K`` the expansion order
    climbs K_LADDER until two successive triples agree to ``tol``."""
    ladder = (K,) if K is not None else K_LADDER
    prev, hist = None, []
    for k in ladder:
        D, labels, m, q = slit_domain(p, k)
        P, sol = D.period_matrix()
        t = triple_from_period(P, labels)
        change = prev.distance(t) if prev is not None else np.inf
        hist.append((k, sol.residual, change))
        if change < tol or sol.residual < 0.1 * tol:
            break
        prev = t
    else:
        if K is None:
            raise SolverFailure(f"slit moduli did not settle: {hist}")
    if return_details:
        return t, {"period": P, "residual": sol.residual, "labels": labels,
                   "chart": m, "history": hist}
    return t


def membrane_domain(atlas, K=48, M=None):
    """Harmonic domain of a single-chart atlas; returns (domain, groups, labels)
    where groups[j] lists the domain components making up oval j."""
    from .harmonic import CircleBoundary, CurvedSlit
    if len(atlas.charts) != 1:
        raise SolverFailure("sewn membranes need the seam-coupled solver")
    ch = atlas.charts[0]
    M = 10 * K if M is None else M
    comps = [CircleBoundary(0.0, ch.rin, outer=False, K=K),
             CircleBoundary(0.0, 1.0, outer=True, K=K)]
    keys = [("circle", 0, "inner"), ("circle", 0, "outer")]
    for c in atlas.slots():
        comps.append(CurvedSlit(c.gamma, c.dgamma, K=K, M=M))
        keys.append(("slot", c.name))
    groups, labels = [], []
    for o in atlas.ovals:
        groups.append([keys.index(tuple(p)) for p in o.pieces])
        labels.append(o.label)
    return Domain(comps), groups, tuple(labels)


def grouped_period(P, groups, weight=1.0):
    n = len(groups)
    Q = np.zeros((n, n))
    for a, ga in enumerate(groups):
        for b, gb in enumerate(groups):
            Q[a, b] = weight * P[np.ix_(ga, gb)].sum()
    return Q


def _membrane_once(atlas, K):
    D, groups, labels = membrane_domain(atlas, K)
    nc = len(D.components)
    rhs = np.zeros((nc, len(groups)))
    for j, g in enumerate(groups):
        rhs[g, j] = 1.0
    sol = D.solve(rhs)
    flux = sol.fluxes()                       # (ncomp, noval)
    weight = 0.5 if atlas.quotient is not None else 1.0
    P = np.array([[weight * flux[gb, a].sum() for gb in groups] for a in range(len(groups))])
    return triple_from_period(P, labels), P, sol


def moduli_of_membrane(atlas, tol=1e-9, K=None, return_details=False):
    """Moduli triple of a membrane; the B2 quotient halves the cover's fluxes."""
    ladder = (K,) if K is not None else K_LADDER
    prev, hist = None, []
    for k in ladder:
        t, P, sol = _membrane_once(atlas, k)
        change = prev.distance(t) if prev is not None else np.inf
        hist.append((k, sol.residual, change))
        if change < tol or sol.residual < 0.1 * tol:
            break
        prev = t
    else:
        if K is None:
            raise SolverFailure(f"membrane moduli did not settle: {hist}")
    if return_details:
        return t, {"period": P, "residual": sol.residual, "history": hist}
    return t


# ---------------------------------------------------------------- matcher

LAMBDA_EDGE = 1e-3
_RECOVERABLE = (PS3Error, ValueError, OverflowError, ZeroDivisionError, np.linalg.LinAlgError)


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def _logit(y):
    return math.log(y / (1.0 - y))


class FashionParams:
    """Unconstrained coordinates x in R^3 for (lambda, h1, h2) of a fashion,
    chosen so that every x satisfies the strict range inequalities."""

    def __init__(self, fashion, m1, m2=0):
        from .membrane import LAMBDA_RANGE
        self.fashion, self.m1, self.m2 = fashion, int(m1), int(m2)
        self.lo, self.hi = LAMBDA_RANGE[fashion]
        self.edge = _logit(LAMBDA_EDGE / (self.hi - self.lo))

    def lam(self, x0):
        return self.lo + (self.hi - self.lo) * _sigmoid(x0)

    def spec(self, x):
        from .membrane import MembraneSpec
        lam = self.lam(x[0])
        mu = math.sqrt((3.0 - lam) / (2.0 * lam))
        r = math.sqrt(mu ** -2 - 1.0)
        f = self.fashion
        if f == "PB1":
            h1 = 1 / mu + r + math.exp(x[1])
            h2 = h1 + math.exp(x[2])
        elif f in ("PA2", "PA3"):
            g, q = 1.0 + math.exp(x[1]), 1.0 + math.exp(x[2])
            h1, h2 = g / math.sqrt(q), g * math.sqrt(q)
        else:
            h1, h2 = math.exp(x[1]), math.exp(x[2])
        return MembraneSpec(f, lam, h1, h2, self.m1, self.m2)

    def coords(self, spec):
        lam = spec.lam
        x0 = _logit((lam - self.lo) / (self.hi - self.lo))
        mu = math.sqrt((3.0 - lam) / (2.0 * lam))
        r = math.sqrt(mu ** -2 - 1.0)
        f = self.fashion
        if f == "PB1":
            return np.array([x0, math.log(spec.h1 - 1 / mu - r), math.log(spec.h2 - spec.h1)])
        if f in ("PA2", "PA3"):
            g, q = math.sqrt(spec.h1 * spec.h2), spec.h2 / spec.h1
            return np.array([x0, math.log(g - 1.0), math.log(q - 1.0)])
        return np.array([x0, math.log(spec.h1), math.log(spec.h2)])

    def grid(self, n=5):
        x0 = np.linspace(self.edge, -self.edge, n)
        if self.fashion == "PB1":
            x1, x2 = np.linspace(-3.0, 2.5, n), np.linspace(-3.0, 2.5, n)
        elif self.fashion in ("PA2", "PA3"):
            x1, x2 = np.linspace(-3.0, 2.0, n), np.linspace(-2.0, 2.5, n)
        else:
            x1, x2 = np.linspace(-2.5, 1.0, n), np.linspace(-2.5, 1.0, n)
        return [np.array([a, b, c]) for a in x0 for b in x1 for c in x2]


@dataclass
class MatchResult:
    spec: object
    residual: float
    iterations: int
    start: tuple
    history: list
    swapped: bool = False

    @property
    def lam(self):
        return self.spec.lam

    @property
    def h1(self):
        return self.spec.h1

    @property
    def h2(self):
        return self.spec.h2

    def to_json(self):
        return {"lambda": self.lam, "h1": self.h1, "h2": self.h2, "residual": self.residual,
                "iterations": self.iterations, "start": list(self.start),
                "fashion": self.spec.fashion, "m1": self.spec.m1, "m2": self.spec.m2,
                "swapped": self.swapped}


def _membrane_moduli(spec, K=None):
    from .membrane import build_membrane
    return moduli_of_membrane(build_membrane(spec), K=K)


def _defect(target, t, swap):
    t = t.swapped() if swap else t
    return np.log(t.aligned(target.labels).as_array()) - np.log(target.as_array())


def _newton(target, fp, x, swap, tol, max_iter, K, fd_step=1e-5):
    hist = []

    def F(xx):
        return _defect(target, _membrane_moduli(fp.spec(xx), K), swap)

    f = F(x)
    for it in range(1, max_iter + 1):
        res = float(np.max(np.abs(np.expm1(f))))
        hist.append((x.tolist(), res))
        if res < tol:
            return x, res, it - 1, hist
        J = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = fd_step
            J[:, j] = (F(x + e) - F(x - e)) / (2 * fd_step)
        try:
            dx = np.linalg.lstsq(J, -f, rcond=1e-12)[0]
        except np.linalg.LinAlgError:
            break
        step = 1.0
        nf = np.linalg.norm(f)
        while step > 1e-4:
            xn = x + step * np.clip(dx, -2.0, 2.0)
            try:
                fn = F(xn)
            except _RECOVERABLE:
                step *= 0.5
                continue
            if np.linalg.norm(fn) < (1 - 1e-4 * step) * nf:
                x, f = xn, fn
                break
            step *= 0.5
        else:
            break
    res = float(np.max(np.abs(np.expm1(f))))
    hist.append((x.tolist(), res))
    return x, res, len(hist) - 1, hist


def settled_K(spec, tol=1e-8, cap=None):
    """Smallest ladder order at which the membrane moduli settle to ``tol``;
    ``cap`` when they have not settled by then."""
    from .membrane import build_membrane
    atlas = build_membrane(spec)
    prev = None
    for k in K_LADDER:
        if cap is not None and k > cap:
            return cap
        t, _, sol = _membrane_once(atlas, k)
        if prev is not None and prev.distance(t) < tol or sol.residual < 0.1 * tol:
            return k
        prev = t
    raise SolverFailure(f"membrane moduli did not settle for {spec}")


NEWTON_K_CAP = 160


def match(target: ModuliTriple, fashion, m1, m2=0, tol=1e-6, max_iter=30,
          n_grid=5, n_starts=6, start=None, K=None, seed=0):
    """Find (lambda, h1, h2) with moduli_of_membrane(spec) = target.

    The coarse grid is screened at a cheap resolution; damped Newton then
    runs from the best ``n_starts`` grid points (or from ``start``) at a
    fixed expansion order, re-certified on the K ladder at the end.
    Raises NoRoot with per-start certificates when every start fails."""
    fp = FashionParams(fashion, m1, m2)
    swaps = (False, True) if target.swapped() != target else (False,)
    if start is not None:
        cands = [(0.0, fp.coords(start), s) for s in swaps]
    else:
        cands = []
        for x in fp.grid(n_grid):
            try:
                t = _membrane_moduli(fp.spec(x), K=32)
            except _RECOVERABLE:
                continue
            for s in swaps:
                cands.append((float(np.max(np.abs(_defect(target, t, s)))), x, s))
        rng = np.random.default_rng(seed)
        order = sorted(range(len(cands)), key=lambda i: (cands[i][0], rng.random()))
        cands = [cands[i] for i in order[:n_starts]]
    certs = []
    for score, x, s in cands:
        x = np.array(x, dtype=float)
        total, hist_all = 0, []
        try:
            k = K or settled_K(fp.spec(x), cap=NEWTON_K_CAP)
            for _ in range(4):
                x, res, its, hist = _newton(target, fp, x, s, tol, max_iter, k)
                total += its
                hist_all += hist
                if res >= tol or K is not None:
                    break
                k_new = settled_K(fp.spec(x))
                if k_new <= k:
                    break
                k = k_new
        except _RECOVERABLE as exc:
            certs.append({"start": list(map(float, x)), "error": str(exc)})
            continue
        certs.append({"start": list(map(float, x)), "residual": res, "iterations": total, "K": k})
        if res < tol:
            return MatchResult(fp.spec(x), res, total, tuple(map(float, cands[0][1])), hist_all, s)
    err = NoRoot(f"no start converged for {fashion} m1={m1} m2={m2}")
    err.certificates = certs
    raise err
