"""Tailored pants built from multi-sheeted annuli over the p-sphere.

Each annulus alpha (between C and eps*R), alpha-bar (between C and
eps^2*R) or beta (between eps*R and its image under chi(DD1)) is charted by
a Moebius map T onto a round annulus q < |w| < 1 followed by zeta = w^(1/m),
so the m-sheeted cover becomes the single annulus q^(1/m) < |zeta| < 1.
Slots and cuts are lifted into the chart by continuation along the curve.
"""
from __future__ import annotations

import cmath
import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec
from .monodromy import EPS3, MobiusComplex, chi_DD1, SpectralParams

FASHIONS = ("PA1", "PA2", "PA3", "PA12", "PA13", "PB1", "PB21", "PB22", "PB23")
FASHION_CASE = {"PA1": "A", "PA2": "A", "PA3": "A", "PA12": "A", "PA13": "A",
                "PB1": "B1", "PB21": "B21", "PB22": "B22", "PB23": "B23"}
LAMBDA_RANGE = {f: (1.0, 3.0) if f.startswith("PB2") else (1.0, 2.0) for f in FASHIONS}
SEWN = ("PA1", "PA12", "PA13")


@dataclass(frozen=True)
class MembraneSpec:
    fashion: str
    lam: float
    h1: float
    h2: float
    m1: int
    m2: int = 0

    @property
    def m(self):
        return self.m1

    @property
    def sp(self):
        return SpectralParams(self.lam)

    @property
    def mu(self):
        return math.sqrt((3.0 - self.lam) / (2.0 * self.lam))

    @property
    def r(self):
        return math.sqrt(max(self.mu ** -2 - 1.0, 0.0))

    @property
    def sewn(self):
        if self.fashion in SEWN:
            return True
        return (self.fashion == "PA2" and self.m2 > 0) or (self.fashion == "PA3" and self.m1 > 0)

    def replace(self, **kw):
        d = dict(fashion=self.fashion, lam=self.lam, h1=self.h1, h2=self.h2, m1=self.m1, m2=self.m2)
        d.update(kw)
        return MembraneSpec(**d)

    def to_json(self):
        return {"fashion": self.fashion, "lambda": self.lam, "h1": self.h1, "h2": self.h2,
                "m1": self.m1, "m2": self.m2}

    @classmethod
    def from_json(cls, d):
        return cls(d["fashion"], float(d["lambda"]), float(d["h1"]), float(d["h2"]),
                   int(d["m1"]), int(d.get("m2", 0)))


# ---------------------------------------------------------------- geometry

@dataclass(frozen=True)
class GCircle:
    """Circle |p - center| = radius; a line through ``center`` with unit
    ``direction`` when radius is inf."""

    center: complex
    radius: float
    direction: complex = 1.0

    @property
    def is_line(self):
        return math.isinf(self.radius)

    def reflection(self):
        """Matrix M with reflection(p) = M . conj(p) in homogeneous form."""
        c = complex(self.center)
        if self.is_line:
            e2 = complex(self.direction) ** 2
            return np.array([[e2, c - e2 * c.conjugate()], [0, 1]], dtype=complex)
        return np.array([[c, self.radius ** 2 - abs(c) ** 2], [1, -c.conjugate()]], dtype=complex)

    def reflect(self, p):
        M = self.reflection()
        q = np.conj(np.asarray(p, dtype=complex))
        return (M[0, 0] * q + M[0, 1]) / (M[1, 0] * q + M[1, 1])

    def sample(self, n=256, span=60.0):
        t = 2 * np.pi * (np.arange(n) + 0.5) / n
        if self.is_line:
            return complex(self.center) + complex(self.direction) * np.tan(t / 2 - np.pi / 2)
        return complex(self.center) + self.radius * np.exp(1j * t)

    def position(self, p):
        """Angular coordinate of points of the circle, for winding counts."""
        p = np.asarray(p, dtype=complex)
        if self.is_line:
            x = ((p - self.center) / self.direction).real
            return 2 * np.arctan(x)
        return np.angle(p - self.center)

    def signed(self, p):
        """Positive inside the circle, or left of the directed line."""
        p = np.asarray(p, dtype=complex)
        if self.is_line:
            return ((p - self.center) / self.direction).imag
        return self.radius - np.abs(p - self.center)

    def to_json(self):
        if self.is_line:
            return {"line": [complex(self.center).real, complex(self.center).imag],
                    "direction": [complex(self.direction).real, complex(self.direction).imag]}
        return {"center": [complex(self.center).real, complex(self.center).imag], "radius": self.radius}


def circle_through(z1, z2, z3):
    z1, z2, z3 = complex(z1), complex(z2), complex(z3)
    w = (z3 - z1) / (z2 - z1)
    if abs(w.imag) < 1e-14 * abs(w):
        return GCircle(z1, math.inf, (z2 - z1) / abs(z2 - z1))
    c = (z2 - z1) * (w - abs(w) ** 2) / (2j * w.imag) + z1
    return GCircle(c, abs(z1 - c))


def mobius_image(m: MobiusComplex, g: GCircle) -> GCircle:
    pts = g.sample(3) if not g.is_line else g.center + g.direction * np.array([-1.0, 0.0, 1.0])
    return circle_through(*[m(complex(z)) for z in pts])


def annulus_map(c1: GCircle, c2: GCircle):
    """Moebius T and radius q with T(inner) = {|w| = q}, T(outer) = {|w| = 1}.
    Returns (T, q, inner_index) where inner_index says which of c1, c2 is inner."""
    M = c2.reflection() @ np.conj(c1.reflection())
    _, vecs = np.linalg.eig(M)
    f1, f2 = vecs[:, 0], vecs[:, 1]
    T = MobiusComplex(f1[1], -f1[0], f2[1], -f2[0])
    r1 = np.abs(T(c1.sample(64)))
    r2 = np.abs(T(c2.sample(64)))
    inner = 0
    if r1.mean() > r2.mean():
        T = MobiusComplex(f2[1], -f2[0], f1[1], -f1[0])
        r1, r2 = 1 / r1, 1 / r2
    if r1.mean() > r2.mean():
        raise ValueError("circles are not nested after normalization")
    spread = max(np.ptp(r1) / r1.mean(), np.ptp(r2) / r2.mean())
    if spread > 1e-8:
        raise ValueError(f"annulus map is not concentric ({spread:.2e})")
    s = 1.0 / r2.mean()
    T = MobiusComplex(T.a * s, T.b * s, T.c, T.d)
    return T, float(r1.mean() * s), inner


def _rotate(T: MobiusComplex, p_ref):
    """Rotate T so that T(p_ref) is real positive."""
    w = T(complex(p_ref))
    e = abs(w) / w
    return MobiusComplex(T.a * e, T.b * e, T.c, T.d)


def _dmobius(T: MobiusComplex, p):
    return T.det / (T.c * p + T.d) ** 2


def lines(sp):
    """The circles C, eps R, eps^2 R and chi(DD1) eps R for these params."""
    lam = sp.lam if isinstance(sp, SpectralParams) else float(sp)
    mu = math.sqrt((3.0 - lam) / (2.0 * lam))
    r = math.sqrt(max(mu ** -2 - 1.0, 0.0))
    C = GCircle(1 / mu, r)
    L1 = GCircle(0.0, math.inf, EPS3)
    L2 = GCircle(0.0, math.inf, EPS3 ** 2)
    R = GCircle(0.0, math.inf, 1.0)
    Lb = mobius_image(MobiusComplex(1, -mu, mu, -1), L1)
    return {"C": C, "green": L1, "blue_bar": L2, "real": R, "green_dd": Lb}


# ---------------------------------------------------------------- charts

@dataclass
class AnnulusChart:
    name: str
    m: int
    T: MobiusComplex
    q: float
    inner: GCircle
    outer: GCircle
    inner_color: str
    outer_color: str

    @property
    def rin(self):
        return self.q ** (1.0 / self.m)

    def project(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        Ti = self.T.inverse()
        w = zeta ** self.m
        return (Ti.a * w + Ti.b) / (Ti.c * w + Ti.d)

    def dproject(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        Ti = self.T.inverse()
        w = zeta ** self.m
        return _dmobius(Ti, w) * self.m * zeta ** (self.m - 1)

    def w_of(self, p):
        p = np.asarray(p, dtype=complex)
        return (self.T.a * p + self.T.b) / (self.T.c * p + self.T.d)

    def lift(self, pfun, s, zeta0, s0=0.0, steps=64):
        """Continue zeta along the p-curve pfun from pfun(s0) (lifted to zeta0)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        w0 = complex(self.w_of(pfun(np.array([s0])))[0])
        tot = np.zeros(len(s))
        prev = np.full(len(s), w0, dtype=complex)
        for j in range(1, steps + 1):
            cur = self.w_of(pfun(s0 + (s - s0) * j / steps))
            tot += np.angle(cur / prev)
            prev = cur
        return zeta0 * np.exp((np.log(np.abs(prev / w0)) + 1j * tot) / self.m)

    def lift_point(self, p, zeta_ref):
        """Lift of p nearest to zeta_ref among the m branches."""
        w = complex(self.w_of(complex(p)))
        z0 = abs(w) ** (1 / self.m) * cmath.exp(1j * cmath.phase(w) / self.m)
        cands = [z0 * cmath.exp(2j * math.pi * k / self.m) for k in range(self.m)]
        return min(cands, key=lambda z: abs(z - zeta_ref))

    def to_json(self):
        return {"name": self.name, "m": self.m, "q": self.q,
                "T": [[self.T.a.real, self.T.a.imag], [self.T.b.real, self.T.b.imag],
                      [self.T.c.real, self.T.c.imag], [self.T.d.real, self.T.d.imag]],
                "inner": {"color": self.inner_color, "circle": self.inner.to_json()},
                "outer": {"color": self.outer_color, "circle": self.outer.to_json()}}


def make_chart(name, m, sp, p_ref=None):
    g = lines(sp)
    pairs = {"alpha": (("C", "red"), ("green", "green")),
             "alphabar": (("C", "red"), ("blue_bar", "blue")),
             "beta": (("green", "green"), ("green_dd", "green"))}
    (k1, col1), (k2, col2) = pairs[name]
    T, q, _ = annulus_map(g[k1], g[k2])
    r1 = np.abs(T(g[k1].sample(8))).mean()
    if abs(r1 - q) < abs(r1 - 1):
        inner, outer, ci, co = g[k1], g[k2], col1, col2
    else:
        inner, outer, ci, co = g[k2], g[k1], col2, col1
    if p_ref is not None:
        T = _rotate(T, p_ref)
    return AnnulusChart(name, int(m), T, q, inner, outer, ci, co)


@dataclass
class ChartCurve:
    """A slot (removed, two banks) or cut (sewn) inside one chart."""

    name: str
    kind: str                 # "slot" or "cut"
    color: str
    chart: int
    pfun: object
    dpfun: object
    zeta0: complex
    s0: float = 0.0
    description: dict = field(default_factory=dict)
    _atlas_charts: list = field(default=None, repr=False)

    def gamma(self, s):
        ch = self._atlas_charts[self.chart]
        return ch.lift(self.pfun, s, self.zeta0, self.s0)

    def dgamma(self, s):
        ch = self._atlas_charts[self.chart]
        s = np.atleast_1d(np.asarray(s, dtype=float))
        z = self.gamma(s)
        p = self.pfun(s)
        w = ch.w_of(p)
        return z / (ch.m * w) * _dmobius(ch.T, p) * self.dpfun(s)

    def p_samples(self, n=200):
        return self.pfun(np.cos(np.linspace(np.pi, 0, n)))


@dataclass(frozen=True)
class Seam:
    """Bank ``bank_a`` of curve a is sewn to bank ``bank_b`` of curve b."""

    curve_a: str
    bank_a: str
    curve_b: str
    bank_b: str


@dataclass
class Oval:
    label: str
    color: str
    pieces: list              # ("circle", chart, "inner"/"outer") or ("slot", name)


@dataclass
class SurfaceAtlas:
    spec: MembraneSpec
    charts: list
    curves: list
    seams: list
    ovals: list
    quotient: dict = None
    unstable: bool = False

    def curve(self, name):
        return next(c for c in self.curves if c.name == name)

    def slots(self, chart=None):
        return [c for c in self.curves if c.kind == "slot" and (chart is None or c.chart == chart)]

    def oval(self, label):
        return next(o for o in self.ovals if o.label == label)

    def color_multiset(self):
        return tuple(sorted(o.color for o in self.ovals))

    def to_json(self):
        return {
            "spec": self.spec.to_json(),
            "charts": [c.to_json() for c in self.charts],
            "curves": [{"name": c.name, "kind": c.kind, "color": c.color, "chart": c.chart,
                        **c.description} for c in self.curves],
            "seams": [dataclasses.asdict(s) for s in self.seams],
            "ovals": [{"label": o.label, "color": o.color, "pieces": [list(p) for p in o.pieces],
                       "winding": boundary_trace(self, o.label).winding} for o in self.ovals],
            "quotient": None if self.quotient is None else
            {"kappa": [self.quotient["kappa"].real, self.quotient["kappa"].imag]},
            "unstable": self.unstable,
            "euler_characteristic": euler_characteristic(self),
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# ---------------------------------------------------------------- validation

def _arg(z):
    return cmath.phase(z)


def spec_audit(s: MembraneSpec):
    """Intermediate quantities behind the range checks."""
    out = {}
    if s.lam <= 1 or s.lam > 3:
        return out
    mu, r = s.mu, s.r
    out.update(mu=mu, r=r, mu_inv=1 / mu)
    if s.fashion == "PB21" and s.m % 2 == 1:
        out["product"] = (1 / mu + r * math.exp(s.h1)) * (1 / mu - r * math.exp(s.h2))
    if s.fashion == "PB22" and s.m % 2 == 1:
        out["arg1"] = _arg(cmath.exp(1j * s.h1) + mu * r)
        out["arg2"] = _arg(cmath.exp(1j * s.h2) - mu * r)
    return out


def validate_spec(s: MembraneSpec):
    """List of violated range conditions (empty when the spec is valid)."""
    v = []
    f = s.fashion
    if f not in FASHIONS:
        return [f"unknown fashion {f}"]
    lo, hi = LAMBDA_RANGE[f]
    if not lo < s.lam < hi:
        v.append(f"lambda={s.lam} not in ({lo}, {hi})")
        return v
    for x in (s.h1, s.h2):
        if not math.isfinite(x):
            v.append("h1, h2 must be finite")
            return v
    mu, r = s.mu, s.r
    a = spec_audit(s)
    if f == "PA1":
        h = complex(s.h1, s.h2)
        if not (abs(h - 1 / mu) > r and abs(_arg(h)) < math.pi / 3):
            v.append("h = h1 + i h2 not in alpha and alpha-bar")
        if abs(h) < 1:
            v.append("|h| >= 1 violated")
        if s.m1 < 1 or s.m2 < 1:
            v.append("m1, m2 >= 1 required")
    elif f in ("PA2", "PA3"):
        if not 0 < s.h1 < s.h2:
            v.append("0 < h1 < h2 violated")
        if s.h1 * s.h2 < 1:
            v.append("h1*h2 >= 1 violated")
        if f == "PA2" and (s.m1 < 1 or s.m2 < 0):
            v.append("m1 >= 1, m2 >= 0 required")
        if f == "PA3" and (s.m1 < 0 or s.m2 < 1):
            v.append("m1 >= 0, m2 >= 1 required")
    elif f in ("PA12", "PA13"):
        if not s.h1 > 0:
            v.append("h > 0 violated")
        if s.h2 != s.h1:
            v.append("h2 must equal h1 for the two-parameter families")
        if s.m1 < 1 or s.m2 < 1:
            v.append("m1, m2 >= 1 required")
    elif f == "PB1":
        if not 1 / mu + r < s.h1:
            v.append("mu^-1 + sqrt(mu^-2 - 1) < h1 violated")
        if not s.h1 < s.h2:
            v.append("h1 < h2 violated")
        if s.m1 < 1:
            v.append("m >= 1 required")
    else:
        m = s.m1
        if m < 1:
            v.append("m >= 1 required")
            return v
        if f == "PB21":
            if not (s.h1 > 0 and s.h2 > 0):
                v.append("h1, h2 > 0 required")
            if m % 2 == 0 and not s.h1 >= s.h2:
                v.append("h1 >= h2 violated (m even)")
            if m % 2 == 1 and not a["product"] >= 1:
                v.append("(mu^-1 + r e^h1)(mu^-1 - r e^h2) >= 1 violated (m odd)")
        elif f == "PB22":
            if m % 2 == 0 and not s.h1 >= s.h2:
                v.append("h1 >= h2 violated (m even)")
            if m % 2 == 1 and not a["arg1"] >= a["arg2"]:
                v.append("Arg(e^{i h1} + mu r) >= Arg(e^{i h2} - mu r) violated (m odd)")
            if not s.h1 + s.h2 < m * math.pi:
                v.append("h1 + h2 < m pi violated")
            if not s.h2 > 0:
                v.append("h2 > 0 violated")
            if not s.h1 > 0:
                v.append("h1 > 0 violated")
        elif f == "PB23":
            if not s.h1 > 0:
                v.append("h1 > 0 violated")
            if not m * math.pi > s.h2 > 0:
                v.append("m pi > h2 > 0 violated")
        if not v:
            v += _b2_geometry_violations(s)
    return v


def check_spec(s: MembraneSpec):
    v = validate_spec(s)
    if v:
        raise InvalidSpec(v)
    return s


# ---------------------------------------------------------------- B2 slots

def _b2_pcurves(s: MembraneSpec):
    """(pfun, dpfun, color, phase) for the two slots of a PB2 fashion."""
    mu, r, m = s.mu, s.r, s.m
    c0 = 1 / mu
    sign = -1.0 if m % 2 else 1.0

    def radial(h, sg):
        return (lambda t: c0 + sg * r * np.exp(h * np.asarray(t)),
                lambda t: sg * r * h * np.exp(h * np.asarray(t)), "blue")

    def arc(h, ph):
        return (lambda t: c0 + r * np.exp(1j * (h * np.asarray(t) + ph)),
                lambda t: 1j * h * r * np.exp(1j * (h * np.asarray(t) + ph)), "red")

    kinds = {"PB21": ("radial", "radial"), "PB22": ("arc", "arc"), "PB23": ("radial", "arc")}[s.fashion]
    out = []
    for k, (kind, h) in enumerate(zip(kinds, (s.h1, s.h2))):
        if kind == "radial":
            out.append(radial(h, 1.0 if k == 0 else sign) + (k,))
        else:
            out.append(arc(h, 0.0 if k == 0 else math.pi * m) + (k,))
    return out


def _beta_chart(s):
    c0, r = 1 / s.mu, s.r
    return make_chart("beta", s.m, s.lam, p_ref=c0 + r)


def _b2_curves(s, chart):
    zf = abs(chart.w_of(1 / s.mu + s.r)) ** (1 / s.m)
    curves = []
    for k, (pf, dpf, color, idx) in enumerate(_b2_pcurves(s)):
        z0 = zf if idx == 0 else -zf
        h = s.h1 if idx == 0 else s.h2
        curves.append(ChartCurve(f"E{idx + 1}", "slot", color, 0, pf, dpf, complex(z0),
                                 description={"family": s.fashion[-1], "h": h,
                                              "phase": 0.0 if idx == 0 else math.pi * s.m}))
    return curves, complex(zf) ** 2


def _b2_geometry_violations(s, n=801):
    try:
        chart = _beta_chart(s)
    except ValueError as exc:
        return [f"annulus beta degenerate: {exc}"]
    curves, _ = _b2_curves(s, chart)
    t = np.linspace(-1, 1, n)
    zs = []
    for c in curves:
        c._atlas_charts = [chart]
        zs.append(c.gamma(t))
    v = []
    for c, z in zip(curves, zs):
        a = np.abs(z)
        if not (np.all(a > chart.rin * (1 + 1e-9)) and np.all(a < 1 - 1e-9)):
            v.append(f"slot {c.name} meets the boundary of m*beta")
    d = np.min(np.abs(zs[0][:, None] - zs[1][None, :]))
    if d < 1e-9:
        v.append("slots intersect")
    return v


# ---------------------------------------------------------------- builders

def _segment(a, b):
    a, b = complex(a), complex(b)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return (lambda t: mid + half * np.asarray(t, dtype=float),
            lambda t: half * np.ones_like(np.asarray(t, dtype=float)), mid)


def _slot_in_chart(name, color, chart, idx, a, b, kind="slot"):
    pf, dpf, mid = _segment(a, b)
    w = complex(chart.w_of(mid))
    z0 = abs(w) ** (1 / chart.m) * cmath.exp(1j * cmath.phase(w) / chart.m)
    return ChartCurve(name, kind, color, idx, pf, dpf, z0,
                      description={"p_from": [complex(a).real, complex(a).imag],
                                   "p_to": [complex(b).real, complex(b).imag]})


def _circle_label(chart, idx, which):
    return ("circle", idx, which)


def _finish(atlas):
    for c in atlas.curves:
        c._atlas_charts = atlas.charts
    return atlas


def _single_slot(s, chart_name, m, a, b, color):
    mid = 0.5 * (complex(a) + complex(b))
    ch = make_chart(chart_name, m, s.lam, p_ref=mid)
    slot = _slot_in_chart("slot", color, ch, 0, a, b)
    ovals = [Oval(ch.inner_color, ch.inner_color, [_circle_label(ch, 0, "inner")]),
             Oval(ch.outer_color, ch.outer_color, [_circle_label(ch, 0, "outer")]),
             Oval(color, color, [("slot", "slot")])]
    return _finish(SurfaceAtlas(s, [ch], [slot], [], ovals))


def _cut_to_C(s, target):
    """Segment from the circle C towards ``target`` along the ray from 1/mu."""
    c0, r = 1 / s.mu, s.r
    d = (complex(target) - c0) / abs(complex(target) - c0)
    return c0 + r * d, complex(target)


def _sewn(s, h_tip, slot=None, unstable=False):
    """Two charts (m1*alpha, m2*alpha-bar) joined crosswise along a cut."""
    ca, cb = _cut_to_C(s, h_tip)
    mid = 0.5 * (ca + cb)
    ch_a = make_chart("alpha", s.m1, s.lam, p_ref=mid)
    ch_b = make_chart("alphabar", s.m2, s.lam, p_ref=mid)
    curves = [_slot_in_chart("cut_a", "none", ch_a, 0, ca, cb, kind="cut"),
              _slot_in_chart("cut_b", "none", ch_b, 1, ca, cb, kind="cut")]
    seams = [Seam("cut_a", "left", "cut_b", "right"), Seam("cut_a", "right", "cut_b", "left")]
    red = [_circle_label(ch_a, 0, "inner" if ch_a.inner_color == "red" else "outer"),
           _circle_label(ch_b, 1, "inner" if ch_b.inner_color == "red" else "outer")]
    green_piece = _circle_label(ch_a, 0, "inner" if ch_a.inner_color == "green" else "outer")
    blue_piece = _circle_label(ch_b, 1, "inner" if ch_b.inner_color == "blue" else "outer")
    ovals = [Oval("red", "red", red), Oval("green", "green", [green_piece]),
             Oval("blue", "blue", [blue_piece])]
    if slot is not None:
        name, color, a, b, chart = slot
        ch = ch_a if chart == 0 else ch_b
        curves.append(_slot_in_chart("slot", color, ch, chart, a, b))
        for o in ovals:
            if o.color == color:
                o.pieces.append(("slot", "slot"))
    return _finish(SurfaceAtlas(s, [ch_a, ch_b], curves, seams, ovals, unstable=unstable))


def build_membrane(s: MembraneSpec) -> SurfaceAtlas:
    check_spec(s)
    f, e, e2 = s.fashion, EPS3, EPS3 ** 2
    if f == "PB1":
        return _single_slot(s, "alpha", s.m1, s.h1, s.h2, "blue")
    if f == "PA2" and s.m2 == 0:
        return _single_slot(s, "alpha", s.m1, -e2 * s.h1, -e2 * s.h2, "blue")
    if f == "PA3" and s.m1 == 0:
        return _single_slot(s, "alphabar", s.m2, -e * s.h1, -e * s.h2, "green")
    if f == "PA1":
        return _sewn(s, complex(s.h1, s.h2))
    if f == "PA12":
        return _sewn(s, -e2 * s.h1, unstable=True)
    if f == "PA13":
        return _sewn(s, -e * s.h1, unstable=True)
    t = min(max(0.5 / s.mu, s.h1), s.h2)
    if f == "PA2":
        a, b = -e2 * s.h1, -e2 * s.h2
        return _sewn(s, -e2 * t, slot=("slot", "blue", a, b, 0))
    if f == "PA3":
        a, b = -e * s.h1, -e * s.h2
        return _sewn(s, -e * t, slot=("slot", "green", a, b, 1))
    ch = _beta_chart(s)
    curves, kappa = _b2_curves(s, ch)
    labels = [c.color for c in curves]
    if labels[0] == labels[1]:
        labels = [labels[0] + "1", labels[1] + "2"]
    ovals = [Oval("green", "green", [("circle", 0, "inner"), ("circle", 0, "outer")]),
             Oval(labels[0], curves[0].color, [("slot", "E1")]),
             Oval(labels[1], curves[1].color, [("slot", "E2")])]
    return _finish(SurfaceAtlas(s, [ch], curves, [], ovals, quotient={"kappa": kappa}))


# ---------------------------------------------------------------- involution

def involution_Xi(point, m, sp):
    """Xi on lifted polar coordinates (rho, phi) about 1/mu, phi mod 2 pi m."""
    rho, phi = point
    lam = sp.lam if isinstance(sp, SpectralParams) else float(sp)
    mu = math.sqrt((3.0 - lam) / (2.0 * lam))
    r2 = mu ** -2 - 1.0
    period = 2 * math.pi * m
    return r2 / rho, (-phi) % period


def xi_chart(atlas: SurfaceAtlas, zeta):
    """Xi in the chart of a PB2 atlas: zeta -> kappa / zeta."""
    return atlas.quotient["kappa"] / np.asarray(zeta, dtype=complex)


# ---------------------------------------------------------------- traces

@dataclass
class OvalTrace:
    label: str
    color: str
    points: np.ndarray
    winding: int


def _piece_samples(atlas, piece, n):
    if piece[0] == "circle":
        ch = atlas.charts[piece[1]]
        rad = ch.rin if piece[2] == "inner" else 1.0
        t = 2 * np.pi * np.arange(n + 1) / n
        z = rad * np.exp(1j * t)
        circ = ch.inner if piece[2] == "inner" else ch.outer
        return ch.project(z), circ
    c = atlas.curve(piece[1])
    t = np.cos(np.linspace(np.pi, 0, n // 2 + 1))
    p = c.pfun(t)
    return np.concatenate([p, p[::-1]]), None


def boundary_trace(atlas: SurfaceAtlas, label, n=400) -> OvalTrace:
    o = atlas.oval(label)
    pts, wind = [], 0.0
    for piece in o.pieces:
        p, circ = _piece_samples(atlas, piece, n)
        pts.append(p)
        if circ is not None:
            pos = np.unwrap(circ.position(p))
            wind += (pos[-1] - pos[0]) / (2 * np.pi)
    return OvalTrace(o.label, o.color, np.concatenate(pts), int(round(abs(wind))))


# ---------------------------------------------------------------- topology

class _Cells:
    def __init__(self):
        self.cells = {0: [], 1: [], 2: []}
        self.parent = {}

    def add(self, dim, name):
        self.cells[dim].append(name)
        self.parent[name] = name

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def glue(self, a, b):
        self.parent[self.find(a)] = self.find(b)

    def euler(self):
        return sum((-1) ** d * len({self.find(x) for x in self.cells[d]}) for d in range(3))


def _chart_cells(cx, pre, n_slots, cut=None):
    """Cells of one annulus chart cut open to a disk.

    ``cut`` describes a sewn cut starting on C: "tip" ends at an interior
    point, "cross" ends on the other boundary circle, "slot" ends on the
    bank of slot 0.  Bridges join the boundary components into a tree.
    """
    V = lambda n: cx.add(0, pre + n)
    E = lambda n: cx.add(1, pre + n)
    for j in range(n_slots):
        V(f"a{j}"), V(f"b{j}"), E(f"up{j}"), E(f"dn{j}")
    if cut is None:
        V("vi"), E("Li"), V("vo"), E("Lo"), E("bridge_io")
        for j in range(n_slots):
            E(f"bridge{j}")
    else:
        V("cl"), V("cr"), E("Carc"), E("cut_l"), E("cut_r")
        if cut == "cross":
            V("ql"), V("qr"), E("Oarc")
        else:
            V("vo"), E("Lo"), E("bridge_o")
            if cut == "tip":
                V("tip")
            else:
                V("ql"), V("qr"), E("up0b")
        for j in range(1 if cut == "slot" else 0, n_slots):
            E(f"bridge{j}")
    cx.add(2, pre + "F")


def _quotient_cells(cx):
    """Xi-equivariant cells of m*beta minus two slots, glued by Xi.

    Bridges vi-a_j and their images vo-b_j cut the cover into two disks
    exchanged by Xi."""
    for n in ("vi", "vo", "a0", "b0", "a1", "b1"):
        cx.add(0, n)
    for n in ("Li", "Lo", "up0", "dn0", "up1", "dn1", "br0", "br0x", "br1", "br1x"):
        cx.add(1, n)
    cx.add(2, "F"), cx.add(2, "Fx")
    for a, b in (("vi", "vo"), ("a0", "b0"), ("a1", "b1"), ("Li", "Lo"), ("up0", "dn0"),
                 ("up1", "dn1"), ("br0", "br0x"), ("br1", "br1x"), ("F", "Fx")):
        cx.glue(a, b)


def euler_characteristic(atlas: SurfaceAtlas) -> int:
    """Euler characteristic of the sewn surface from its cell structure."""
    cx = _Cells()
    if atlas.quotient is not None:
        _quotient_cells(cx)
        return cx.euler()
    if len(atlas.charts) == 1:
        _chart_cells(cx, "", len(atlas.slots()))
        return cx.euler()
    f = atlas.spec.fashion
    slots = atlas.slots()
    if slots:
        kinds = ("slot", "cross") if slots[0].chart == 0 else ("cross", "slot")
    else:
        kinds = {"PA1": ("tip", "tip"), "PA12": ("tip", "cross"), "PA13": ("cross", "tip")}[f]
    for pre, k in zip("AB", kinds):
        _chart_cells(cx, pre, 1 if k == "slot" else 0, cut=k)
    cx.glue("Acl", "Bcr"), cx.glue("Acr", "Bcl")
    cx.glue("Acut_l", "Bcut_r"), cx.glue("Acut_r", "Bcut_l")
    ends = {k: pre for pre, k in zip("AB", kinds)}
    if kinds == ("tip", "tip"):
        cx.glue("Atip", "Btip")
    elif "tip" in ends:
        t, c = ends["tip"], ends["cross"]
        cx.glue(t + "tip", c + "ql"), cx.glue(t + "tip", c + "qr")
    else:
        cx.glue("Aql", "Bqr"), cx.glue("Aqr", "Bql")
    return cx.euler()


# ---------------------------------------------------------------- rendering

_SVG_COLORS = {"red": "#c0392b", "green": "#27ae60", "blue": "#2e64c8", "none": "#555555"}


def render_svg(atlas: SurfaceAtlas, size=360) -> str:
    """Chart diagrams side by side, ovals drawn in their colors."""
    parts = []
    W = size * len(atlas.charts)
    for k, ch in enumerate(atlas.charts):
        ox, sc = k * size + size / 2, 0.45 * size

        def xy(z):
            return ox + sc * np.real(z), size / 2 - sc * np.imag(z)

        for rad, col in ((1.0, ch.outer_color), (ch.rin, ch.inner_color)):
            parts.append(f'<circle cx="{ox:.2f}" cy="{size / 2:.2f}" r="{sc * rad:.2f}" '
                         f'fill="none" stroke="{_SVG_COLORS[col]}" stroke-width="2"/>')
        for c in atlas.curves:
            if c.chart != k:
                continue
            x, y = xy(c.gamma(np.linspace(-1, 1, 80)))
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))
            dash = ' stroke-dasharray="5,3"' if c.kind == "cut" else ""
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{_SVG_COLORS[c.color]}" '
                         f'stroke-width="2"{dash}/>')
        parts.append(f'<text x="{k * size + 8}" y="16" font-size="12">{ch.name} (m={ch.m})</text>')
    title = f"{atlas.spec.fashion} lambda={atlas.spec.lam:g} h1={atlas.spec.h1:g} h2={atlas.spec.h2:g}"
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{size + 20}">'
            f'<text x="8" y="{size + 14}" font-size="12">{title}</text>' + "".join(parts) + "</svg>\n")
