"""Real rational functions of degree three: branch data, point types,
the A/B1/B21/B22/B23 classification and gauge transformations.

Points of the extended real line are floats, with ``math.inf`` standing for
the point at infinity.  Cyclic comparisons are done in the angle chart
``theta = 2*arctan(x)``, which sends the extended line onto a circle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import AtBranchPoint, DegenerateBranching, Unclassifiable

INF = math.inf
CASES = ("A", "B1", "B21", "B22", "B23")


def _trim(c, tol=1e-14):
    c = np.asarray(c)
    if not np.iscomplexobj(c):
        c = c.astype(float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    k = len(c)
    while k > 1 and abs(c[k - 1]) <= tol * scale:
        k -= 1
    return c[:k]


def _pad4(c):
    out = np.zeros(4)
    c = np.asarray(c, dtype=float)[:4]
    out[: len(c)] = c
    return out


def is_real(z, tol=1e-9):
    return abs(np.imag(z)) < tol * (1.0 + abs(np.real(z)))


def poly_roots(c):
    """Roots of an ascending-coefficient polynomial: companion-matrix
    eigenvalues followed by one Newton step."""
    c = _trim(c)
    if len(c) < 2:
        return np.zeros(0, dtype=complex)
    r = P.polyroots(c).astype(complex)
    dc = P.polyder(c)
    for i, z in enumerate(r):
        d = P.polyval(z, dc)
        if d != 0:
            step = P.polyval(z, c) / d
            if abs(step) < 1e-3 * (1 + abs(z)):
                r[i] = z - step
    return r


def angle(x):
    """Position of an extended real point on the circle, in (-pi, pi]."""
    if math.isinf(x):
        return math.pi
    return 2.0 * math.atan(x)


def from_angle(t):
    t = (t + math.pi) % (2 * math.pi) - math.pi
    if abs(abs(t) - math.pi) < 1e-15:
        return INF
    return math.tan(t / 2.0)


def ccw(a, b):
    """Angular length of the positively oriented arc from a to b."""
    return (angle(b) - angle(a)) % (2 * math.pi)


def on_arc(x, lo, hi, closed=True):
    """True if x lies on the positively oriented arc lo -> hi."""
    d = ccw(lo, x)
    L = ccw(lo, hi)
    eps = 1e-13
    if closed:
        return d <= L + eps or d >= 2 * math.pi - eps
    return eps < d < L - eps


def arc_midpoint(lo, hi):
    return from_angle(angle(lo) + 0.5 * ccw(lo, hi))


def same_point(x, y, tol=1e-9):
    if math.isinf(x) or math.isinf(y):
        return (math.isinf(x) and math.isinf(y)) or abs(
            angle(x) % (2 * math.pi) - angle(y) % (2 * math.pi)) < tol
    return abs(x - y) <= tol * (1 + abs(x) + abs(y))


@dataclass(frozen=True)
class MobiusReal:
    """The segment-preserving map ``t -> sign*(t+alpha)/(alpha*t+1)``."""

    alpha: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if not -1 < self.alpha < 1 or self.sign not in (1, -1):
            raise ValueError("need alpha in (-1,1) and sign = +-1")

    def __call__(self, t):
        s, a = self.sign, self.alpha
        if isinstance(t, float) and math.isinf(t):
            return s / a if a != 0 else INF
        den = a * t + 1
        if np.isscalar(t) and den == 0:
            return INF
        return s * (t + a) / den

    def inverse(self):
        return MobiusReal(-self.sign * self.alpha, self.sign)

    def matrix(self):
        return self.sign * np.array([[1.0, self.alpha], [self.alpha, 1.0]])


@dataclass(frozen=True)
class RationalDeg3:
    """R(t) = num(t)/den(t), coefficients in ascending powers."""

    num: tuple
    den: tuple

    def __post_init__(self):
        n, d = _pad4(self.num), _pad4(self.den)
        scale = max(np.max(np.abs(n)), np.max(np.abs(d)))
        if scale == 0 or not np.any(d):
            raise ValueError("zero numerator/denominator")
        object.__setattr__(self, "num", tuple(float(v) for v in n / scale))
        object.__setattr__(self, "den", tuple(float(v) for v in d / scale))
        if self.degree != 3:
            raise ValueError(f"degree is {self.degree}, expected 3")
        if self._resultant_small():
            raise ValueError("numerator and denominator share a root")

    @property
    def n(self):
        return np.array(self.num)

    @property
    def d(self):
        return np.array(self.den)

    @property
    def degree(self):
        return max(len(_trim(self.num)), len(_trim(self.den))) - 1

    def _resultant_small(self):
        rn, rd = poly_roots(self.num), poly_roots(self.den)
        for z in rn:
            for w in rd:
                if abs(z - w) < 1e-10 * (1 + abs(z)):
                    return True
        return False

    def __call__(self, t):
        if np.isscalar(t) and not isinstance(t, complex) and math.isinf(t):
            return self.at_infinity()
        num = P.polyval(t, self.n)
        den = P.polyval(t, self.d)
        if np.isscalar(t) and den == 0:
            return INF
        return num / den

    def at_infinity(self):
        if self.den[3] != 0:
            return self.num[3] / self.den[3]
        return INF

    def derivative(self, t):
        n, d = self.n, self.d
        nn = P.polyval(t, n)
        dd = P.polyval(t, d)
        return (P.polyval(t, P.polyder(n)) * dd - nn * P.polyval(t, P.polyder(d))) / dd**2

    def crit_numerator(self):
        n, d = self.n, self.d
        return P.polysub(P.polymul(P.polyder(n), d), P.polymul(n, P.polyder(d)))

    def level_poly(self, y):
        """Coefficients of num - y*den (den alone when y is infinite)."""
        if not isinstance(y, complex) and math.isinf(np.real(y)):
            return self.d.astype(complex)
        return self.n - y * self.d

    def to_json(self):
        return {"num": list(self.num), "den": list(self.den)}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(tuple(obj["num"]), tuple(obj["den"]))

    def check_nondegenerate(self, npts=2001):
        """Rejects parameters with a vanishing or infinite derivative on [-1,1]."""
        t = np.cos(np.linspace(0, np.pi, npts))
        if np.any(np.abs(P.polyval(t, self.d)) < 1e-12 * np.max(np.abs(self.d))):
            raise DegenerateBranching("pole on [-1,1]")
        crit = self.crit_numerator()
        for z in poly_roots(crit):
            if is_real(z) and -1 - 1e-12 <= z.real <= 1 + 1e-12:
                raise DegenerateBranching(f"critical point {z.real:.6g} on [-1,1]")
        poles = [z for z in poly_roots(self.den) if is_real(z) and abs(z.real) <= 1]
        if poles:
            raise DegenerateBranching("pole on [-1,1]")
        g = np.abs(self.derivative(t))
        if not np.all(np.isfinite(g)) or g.min() < 1e-8 * g.max():
            raise DegenerateBranching("derivative nearly vanishes on [-1,1]")


def preimages(R: RationalDeg3, y):
    """All three solutions of R(z) = y, infinite ones reported as ``inf``."""
    c = _trim(R.level_poly(y))
    k = len(c) - 1
    roots = list(poly_roots(c)) if k >= 1 else []
    roots += [complex(INF)] * (3 - k)
    return roots


def point_type(R: RationalDeg3, y, branch=None):
    """'3:0' when R^{-1}(y) is three real points, '1:2' otherwise."""
    if branch is None:
        branch = _raw_critical(R)[1]
    for a in branch:
        if same_point(y, a, 1e-9):
            raise AtBranchPoint(f"y={y} is a branch point")
    roots = preimages(R, y)
    nreal = sum(1 for z in roots if math.isinf(z.real) or is_real(z))
    return "3:0" if nreal == 3 else "1:2"


def _raw_critical(R: RationalDeg3):
    crit = _trim(R.crit_numerator())
    dg = len(crit) - 1
    roots = poly_roots(crit)
    bs = []
    for z in roots:
        if not is_real(z):
            raise DegenerateBranching("complex critical point")
        bs.append(float(z.real))
    n_inf = 4 - dg
    if n_inf > 1:
        raise DegenerateBranching("multiple critical point at infinity")
    if n_inf == 1:
        bs.append(INF)
    for i in range(len(bs)):
        for j in range(i):
            if same_point(bs[i], bs[j], 1e-7):
                raise DegenerateBranching("colliding critical points")
    avals = [R(b) if not math.isinf(b) else R.at_infinity() for b in bs]
    avals = [float(a) for a in avals]
    for i in range(4):
        if same_point(avals[i], 1.0, 1e-9) or same_point(avals[i], -1.0, 1e-9):
            raise DegenerateBranching("critical value equals +-1")
        for j in range(i):
            if same_point(avals[i], avals[j], 1e-8):
                raise DegenerateBranching("colliding critical values")
    return bs, avals


def _chordal(z, w):
    if np.isinf(z) and np.isinf(w):
        return 0.0
    if np.isinf(z):
        z, w = w, z
    if np.isinf(w):
        return 1.0 / math.sqrt(1 + abs(z) ** 2)
    return abs(z - w) / math.sqrt((1 + abs(z) ** 2) * (1 + abs(w) ** 2))


def _co_preimage(R: RationalDeg3, a, b):
    """The ordinary point c with R(c) = a next to the double point b."""
    roots = preimages(R, a)
    z = max(roots, key=lambda r: _chordal(r, b))
    if not (np.isinf(z) or is_real(z, 1e-7)):
        raise DegenerateBranching("non-real co-preimage")
    return INF if np.isinf(z) else float(z.real)


@dataclass(frozen=True)
class BranchData:
    a: tuple
    b: tuple
    c: tuple
    case: str = field(default="")

    def to_json(self):
        f = lambda v: "inf" if math.isinf(v) else v
        return {"a": [f(v) for v in self.a], "b": [f(v) for v in self.b],
                "c": [f(v) for v in self.c], "case": self.case}


def _pair_arc(p, q, others):
    """The arc between p and q avoiding ``others``, positively oriented."""
    if not any(on_arc(o, p, q) for o in others):
        return p, q
    return q, p


def critical_data(R: RationalDeg3) -> BranchData:
    """Branch points a_s, critical points b_s and co-preimages c_s.

    The a_s follow the positive cyclic order with (a1,a2), (a3,a4) of type
    (1:2).  Of the two labelings allowed by this rule, the one that puts
    [-1,1] inside [b2,b3] (case A) or [b3,b4] (case B) is returned.
    """
    bs, avals = _raw_critical(R)
    order = sorted(range(4), key=lambda i: angle(avals[i]) % (2 * math.pi))
    types = []
    for k in range(4):
        lo, hi = avals[order[k]], avals[order[(k + 1) % 4]]
        types.append(point_type(R, arc_midpoint(lo, hi), avals))
    starts = [k for k in range(4) if types[k] == "1:2"]
    if len(starts) != 2 or (starts[1] - starts[0]) != 2:
        raise DegenerateBranching(f"non-alternating point types {types}")
    candidates = []
    for s in starts:
        idx = [order[(s + j) % 4] for j in range(4)]
        a = tuple(avals[i] for i in idx)
        b = tuple(bs[i] for i in idx)
        candidates.append((a, b))
    for a, b in candidates:
        case = _case_for_labeling(R, a, b)
        if case:
            c = tuple(_co_preimage(R, a[s], b[s]) for s in range(4))
            if case == "B":
                case = _b_subcase(b, c)
            return BranchData(a, b, c, case)
    raise Unclassifiable("[-1,1] lies in no admissible arc of critical points")


def _case_for_labeling(R, a, b):
    def contains_segment(i, j):
        others = [b[k] for k in range(4) if k not in (i, j)]
        lo, hi = _pair_arc(b[i], b[j], others)
        return all(on_arc(x, lo, hi, closed=False) for x in (-1.0, 0.0, 1.0))

    if contains_segment(1, 2):
        return "A"
    if contains_segment(2, 3):
        return "B"
    return ""


def _b_subcase(b, c):
    lo, hi = _pair_arc(c[1], c[0], [b[2], b[3]])
    if not on_arc(lo, b[2], b[3]) and not on_arc(lo, b[3], b[2]):
        raise Unclassifiable("co-preimages misplaced")
    inside = [on_arc(x, lo, hi) for x in (-1.0, 1.0)]
    if all(inside) and on_arc(0.0, lo, hi):
        return "B21"
    c_in = [on_arc(x, -1.0, 1.0) for x in (c[1], c[0])]
    if all(c_in):
        return "B22"
    if not any(inside) and not any(c_in):
        return "B1"
    return "B23"


def classify(R: RationalDeg3) -> str:
    try:
        R.check_nondegenerate()
    except DegenerateBranching as exc:
        raise Unclassifiable(str(exc)) from exc
    return critical_data(R).case


def gauge_apply(R: RationalDeg3, L: MobiusReal, side: str = "pre") -> RationalDeg3:
    """L o R for side='post', R o L for side='pre'."""
    s, a = L.sign, L.alpha
    if side == "post":
        num = s * (R.n + a * R.d)
        den = a * R.n + R.d
        return RationalDeg3(tuple(num), tuple(den))
    if side != "pre":
        raise ValueError("side must be 'pre' or 'post'")
    lin_num = np.array([s * a, s * 1.0])
    lin_den = np.array([1.0, a])

    def compose(c):
        out = np.zeros(4)
        for k in range(4):
            term = P.polymul(P.polypow(lin_num, k), P.polypow(lin_den, 3 - k))
            out[: len(term)] += c[k] * term
        return out

    return RationalDeg3(tuple(compose(R.n)), tuple(compose(R.d)))


# Normalized covering x^2 L(x), with L(1)=1, L'(1)=-2.

def normalized_covering(c: float) -> RationalDeg3:
    num = (0.0, 0.0, 2.0 - 3.0 * c, 2.0 * c - 1.0)
    den = (-c, 1.0, 0.0, 0.0)
    return RationalDeg3(num, den)


def chart_fixture(c: float, x_lo: float, x_hi: float) -> RationalDeg3:
    """Normalized covering restricted to [x_lo, x_hi], rescaled so that
    [-1,1] goes onto [x_lo, x_hi] and then back onto [-1,1]."""
    Rt = normalized_covering(c)
    mid, half = 0.5 * (x_lo + x_hi), 0.5 * (x_hi - x_lo)
    lin = np.array([mid, half])
    num = np.zeros(4)
    den = np.zeros(4)
    for k in range(4):
        term = P.polypow(lin, k)
        num[: len(term)] += Rt.num[k] * term
        den[: len(term)] += Rt.den[k] * term
    y0, y1 = Rt(x_lo), Rt(x_hi)
    A = 2.0 / (y1 - y0)
    B = -1.0 - A * y0
    return RationalDeg3(tuple(A * num + B * den), tuple(den))


FIXTURE_C = 0.4
FIXTURE_SEGMENTS = {
    "A": (1.1, 1.5),
    "B1": (1.7, 1.9),
    "B21": (2.5, 3.5),
    "B22": (1.7, 5.0),
    "B23": (3.0, 6.0),
}


def fixture(case: str) -> RationalDeg3:
    """Concrete parameter of the given case built from the c=0.4 covering."""
    return chart_fixture(FIXTURE_C, *FIXTURE_SEGMENTS[case])


def fixture_chart_affine(case: str):
    lo, hi = FIXTURE_SEGMENTS[case]
    return 0.5 * (lo + hi), 0.5 * (hi - lo)
