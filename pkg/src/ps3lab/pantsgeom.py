"""Real-slit pants attached to a degree-3 parameter, their normal forms
under real Moebius maps, and the reconstruction of the parameter from
pants plus case label."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InconsistentColors, NoPreimageSegment, OutOfRange
from .ratfun import (INF, RationalDeg3, angle, arc_midpoint, ccw, critical_data,
                     normalized_covering, on_arc, same_point)

COLORS = ("red", "green", "blue")
CASE_COLORS = {
    "A": ("blue", "green", "red"),
    "B1": ("blue", "green", "red"),
    "B23": ("blue", "green", "red"),
    "B21": ("blue", "blue", "green"),
    "B22": ("green", "red", "red"),
}


def _enc(x):
    return "inf" if math.isinf(x) else float(x)


def _dec(x):
    return INF if x in ("inf", "Infinity", "-inf") else float(x)


@dataclass(frozen=True)
class Slot:
    """Closed arc of the extended real line, traversed positively lo -> hi."""

    lo: float
    hi: float
    color: str

    def contains(self, x, closed=True):
        return on_arc(x, self.lo, self.hi, closed)

    @property
    def length(self):
        return ccw(self.lo, self.hi)


@dataclass(frozen=True)
class RealSlitPants:
    slots: tuple

    def __post_init__(self):
        if len(self.slots) != 3:
            raise ValueError("pants need exactly three slots")
        for s in self.slots:
            if s.color not in COLORS:
                raise ValueError(f"unknown color {s.color}")
        ss = self.slots
        for i in range(3):
            for j in range(i + 1, 3):
                if (ss[i].contains(ss[j].lo) or ss[i].contains(ss[j].hi)
                        or ss[j].contains(ss[i].lo)):
                    raise ValueError("slots overlap")
        cols = sorted(s.color for s in ss)
        if cols not in (sorted(COLORS), ["blue", "blue", "green"], ["green", "red", "red"]):
            raise ValueError(f"invalid color multiset {cols}")

    def cyclic(self):
        """Slots in positive cyclic order, starting from the smallest angle."""
        return sorted(self.slots, key=lambda s: angle(s.lo) % (2 * math.pi))

    def color_multiset(self):
        return tuple(sorted(s.color for s in self.slots))

    def endpoints(self):
        return [x for s in self.cyclic() for x in (s.lo, s.hi)]

    def by_color(self, color):
        return [s for s in self.cyclic() if s.color == color]

    def mapped(self, m: "RealMobius", swap=None):
        """Image under a real Moebius map, colors optionally swapped."""
        out = []
        for s in self.slots:
            lo, hi = m(s.lo), m(s.hi)
            if m.det < 0:
                lo, hi = hi, lo
            col = s.color
            if swap and col in swap:
                col = swap[col]
            out.append(Slot(lo, hi, col))
        return RealSlitPants(tuple(out))

    def to_json(self):
        return {"slots": [{"lo": _enc(s.lo), "hi": _enc(s.hi), "color": s.color}
                          for s in self.cyclic()]}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(Slot(_dec(d["lo"]), _dec(d["hi"]), d["color"]) for d in obj["slots"]))


@dataclass(frozen=True)
class RealMobius:
    """t -> (a t + b)/(c t + d) with real coefficients."""

    a: float
    b: float
    c: float
    d: float

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def __call__(self, t):
        if math.isinf(t):
            return self.a / self.c if self.c != 0 else INF
        den = self.c * t + self.d
        if den == 0:
            return INF
        return (self.a * t + self.b) / den

    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    @classmethod
    def from_matrix(cls, m):
        return cls(*(float(v) for v in np.asarray(m).ravel()))

    def inverse(self):
        return RealMobius(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other):
        return RealMobius.from_matrix(self.matrix() @ other.matrix())

    @classmethod
    def three_point(cls, x1, x2, x3):
        """The map sending x1, x2, x3 to 0, 1, inf."""
        def col(x):
            return np.array([1.0, 0.0]) if math.isinf(x) else np.array([x, 1.0])
        # t -> (t-x1)(x2-x3)/((t-x3)(x2-x1)) in homogeneous form
        v1, v2, v3 = col(x1), col(x2), col(x3)
        row0 = np.array([v1[1], -v1[0]])   # vanishes at x1
        row1 = np.array([v3[1], -v3[0]])   # vanishes at x3
        s = (row1 @ v2) / (row0 @ v2)
        return cls.from_matrix(np.vstack([s * row0, row1]))


def _symmetric_difference(a1, a2):
    """Components of [-1,1] xor arc(a1,a2), colored red or blue."""
    pts = sorted({-1.0, 1.0, a1, a2}, key=lambda x: angle(x) % (2 * math.pi))
    if len(pts) != 4:
        raise OutOfRange("branch value coincides with +-1")
    out = []
    for k in range(4):
        lo, hi = pts[k], pts[(k + 1) % 4]
        mid = arc_midpoint(lo, hi)
        in_s = on_arc(mid, -1.0, 1.0)
        in_a = on_arc(mid, a1, a2)
        if in_s != in_a:
            out.append(Slot(lo, hi, "red" if in_s else "blue"))
    return out


def associate_pants(R: RationalDeg3) -> RealSlitPants:
    bd = critical_data(R)
    a1, a2, a3, a4 = bd.a
    slots = _symmetric_difference(a1, a2) + [Slot(a3, a4, "green")]
    return RealSlitPants(tuple(slots))


# Normalized covering parametrization

def b_of_c(c):
    return c * (3 * c - 2) / (2 * c - 1)


def a_of_c(c):
    return c * (3 * c - 2) ** 3 / (2 * c - 1)


def normalized_params(a: float):
    """The root c in (1/3, 1/2) of a(c) = a, and b(c)."""
    if not a > 1:
        raise OutOfRange("need a > 1")
    lo, hi = 1.0 / 3.0, 0.5
    f = lambda c: a_of_c(c) - a
    # a(c) - 1 ~ 27/2 (c - 1/3)^2 ... keep brackets strictly interior
    x0 = lo + 1e-15
    x1 = hi - 1e-16
    while f(x1) < 0:
        x1 = 0.5 * (x1 + hi)
        if x1 >= hi:
            raise OutOfRange(f"a={a} too large to resolve")
    c = brentq(f, x0, x1, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
    return c, b_of_c(c)


# Canonical forms

@dataclass(frozen=True)
class PantsCanonicalForm:
    """Six endpoints normalized so the reference slot is [0,1] and the next
    endpoint is inf; the other three are negative reals in increasing order."""

    points: tuple
    colors: tuple

    def distance(self, other):
        if self.colors != other.colors:
            return math.inf
        return max(abs(x - y) / (1 + abs(x)) for x, y in zip(self.points[3:], other.points[3:]))

    def to_json(self):
        return {"points": [_enc(x) for x in self.points], "colors": list(self.colors)}


def _reference_color(p: RealSlitPants):
    cols = [s.color for s in p.slots]
    for c in ("red", "green", "blue"):
        if cols.count(c) == 1:
            return c
    raise ValueError("no uniquely colored slot")


def canonical_form(p: RealSlitPants) -> PantsCanonicalForm:
    ref = _reference_color(p)
    best = None
    for orient in (1, -1):
        q = p if orient == 1 else p.mapped(RealMobius(-1.0, 0.0, 0.0, 1.0))
        cyc = q.cyclic()
        k = [s.color for s in cyc].index(ref)
        order = cyc[k:] + cyc[:k]
        e = [x for s in order for x in (s.lo, s.hi)]
        m = RealMobius.three_point(e[0], e[1], e[2])
        pts = [m(x) for x in e]
        pts[0], pts[1], pts[2] = 0.0, 1.0, INF
        key = (tuple(s.color for s in order), tuple(pts[3:]))
        if best is None or key < best:
            best = key
    return PantsCanonicalForm(tuple([0.0, 1.0, INF] + list(best[1])), best[0])


def same_pants(p: RealSlitPants, q: RealSlitPants, tol=1e-8):
    return canonical_form(p).distance(canonical_form(q)) < tol


# Reconstruction

def _span_of_segment(p: RealSlitPants, case: str):
    """The arc of the pants where [-1,1] sits, and the extended blue arc."""
    green = p.by_color("green")[0]
    others = [s for s in p.cyclic() if s is not green]
    if case in ("A", "B1"):
        red = p.by_color("red")[0]
        blue = p.by_color("blue")[0]
        return (red.lo, red.hi), (blue.lo, blue.hi)
    # repaint the gap between the two non-green slots that avoids green
    s1, s2 = others
    if on_arc(green.lo, s1.hi, s2.lo):
        s1, s2 = s2, s1
    if on_arc(green.lo, s1.hi, s2.lo):
        raise InconsistentColors("green slot separates the other two from both sides")
    gap = (s1.hi, s2.lo)
    blue_ext = (s1.lo, s2.hi)
    if case == "B21":
        span = gap
    elif case == "B22":
        span = (s1.lo, s2.hi)
        blue_ext = gap
    else:
        red = s1 if s1.color == "red" else s2
        if red is s2:
            span, blue_ext = (s1.hi, s2.hi), (s1.lo, s2.lo)
        else:
            span, blue_ext = (s1.lo, s2.lo), (s1.hi, s2.hi)
    return span, blue_ext


def _check_colors(p: RealSlitPants, case: str):
    want = tuple(sorted(CASE_COLORS[case]))
    if p.color_multiset() != want:
        raise InconsistentColors(f"colors {p.color_multiset()} do not fit case {case}")
    if case in ("A", "B1"):
        cyc = p.cyclic()
        k = [s.color for s in cyc].index("red")
        order = tuple(s.color for s in cyc[k:] + cyc[:k])
        need = ("red", "green", "blue") if case == "A" else ("red", "blue", "green")
        if order != need:
            raise InconsistentColors(f"cyclic color order {order} does not fit case {case}")


def normalize_position(p: RealSlitPants, case: str):
    """Move the pants by a real Moebius map so that the arc standing for
    [-1,1] is exactly [-1,1]; identity when it already is."""
    _check_colors(p, case)
    (lo, hi), _ = _span_of_segment(p, case)
    if same_point(lo, -1.0, 1e-12) and same_point(hi, 1.0, 1e-12):
        return p
    g = p.by_color("green")[0].lo
    # lo, hi, g -> -1, 1, inf
    m0 = RealMobius.three_point(lo, hi, g)           # -> 0, 1, inf
    lin = RealMobius(2.0, -1.0, 0.0, 1.0)             # 0,1 -> -1,1
    return p.mapped(lin @ m0)


def _lift(Rt, target, lo, hi):
    f = lambda x: Rt(x) - target
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)


def reconstruct_R3(p: RealSlitPants, case: str) -> RationalDeg3:
    if case not in CASE_COLORS:
        raise ValueError(f"unknown case {case}")
    p = normalize_position(p, case)
    _, (a1, a2) = _span_of_segment(p, case)
    green = p.by_color("green")[0]
    a3, a4 = green.lo, green.hi
    La = RealMobius.three_point(a1, a2, a4)
    a = La(a3)
    c, b = normalized_params(a)
    Rt = normalized_covering(c)
    ym, yp = La(-1.0), La(1.0)
    if math.isinf(ym) or math.isinf(yp):
        raise NoPreimageSegment("L_a sends an endpoint of [-1,1] to infinity")
    if case == "A":
        if not (1 <= min(ym, yp) and max(ym, yp) <= a):
            raise NoPreimageSegment("L_a[-1,1] is not inside [1,a]")
        xm, xp = _lift(Rt, ym, 1.0, b), _lift(Rt, yp, 1.0, b)
    else:
        if not max(ym, yp) <= a:
            raise NoPreimageSegment("L_a[-1,1] is not inside (-inf,a]")
        X = 2 * b
        while Rt(X) > min(ym, yp):
            X *= 2
            if X > 1e12:
                raise NoPreimageSegment("lift escapes to infinity")
        xm, xp = _lift(Rt, ym, b, X), _lift(Rt, yp, b, X)
    # R = La^{-1} o Rt o Lb with Lb affine, Lb(-1) = xm, Lb(1) = xp
    mid, half = 0.5 * (xm + xp), 0.5 * (xp - xm)
    lin = np.array([mid, half])
    num = np.zeros(4)
    den = np.zeros(4)
    for k in range(4):
        term = np.polynomial.polynomial.polypow(lin, k)
        num[: len(term)] += Rt.num[k] * term
        den[: len(term)] += Rt.den[k] * term
    inv = La.inverse()
    return RationalDeg3(tuple(inv.a * num + inv.b * den), tuple(inv.c * num + inv.d * den))


def orient_for_case(p: RealSlitPants, case: str) -> RealSlitPants:
    """Reflect t -> -t when the cyclic color order is reversed for the case."""
    try:
        _check_colors(p, case)
        return p
    except InconsistentColors:
        q = p.mapped(RealMobius(-1.0, 0.0, 0.0, 1.0))
        _check_colors(q, case)
        return q
