"""Monodromy generators, the invariant quadratic form, quadric line
coordinates p+/p- and the spinor map to Moebius transformations."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentCoordinates, Indeterminate, SingularParams

EPS3 = cmath.exp(2j * math.pi / 3)
LAMBDA_MARGIN = 1e-6


@dataclass(frozen=True)
class SpectralParams:
    lam: float

    def __post_init__(self):
        lam = self.lam
        if not (0 < lam <= 3) or lam == 1:
            raise SingularParams(f"lambda={lam} outside (0, 3] minus {{1}}")

    @property
    def in_window(self):
        """True away from the singular values 0, 1, 3."""
        lam = self.lam
        return LAMBDA_MARGIN <= lam <= 3 - LAMBDA_MARGIN and abs(lam - 1) >= LAMBDA_MARGIN

    @property
    def delta(self):
        return 2.0 / (self.lam - 1.0)

    @property
    def mu(self):
        return math.sqrt((3.0 - self.lam) / (2.0 * self.lam))

    @property
    def radius(self):
        """Radius of the circle C, zero or NaN when it degenerates."""
        v = self.mu ** -2 - 1.0
        return math.sqrt(v) if v >= 0 else float("nan")


def _as_params(sp):
    return sp if isinstance(sp, SpectralParams) else SpectralParams(float(sp))


_PERM = {
    "D1": np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=float),
    "D2": np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=float),
    "D3": np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=float),
}


def generator(which: str, sp=None) -> np.ndarray:
    if which in _PERM:
        return _PERM[which].copy()
    if which == "D":
        d = _as_params(sp).delta
        return np.array([[-1.0, d, d], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    if which in ("DD1", "D1D"):
        return generator("D", sp) @ _PERM["D1"]
    raise ValueError(f"unknown generator {which}")


def quadratic_form_J(W, delta: float):
    W = np.asarray(W)
    sq = W[0] ** 2 + W[1] ** 2 + W[2] ** 2
    cross = W[0] * W[1] + W[0] * W[2] + W[1] * W[2]
    return sq - delta * cross


def J_bullet(V):
    return V[0] * V[2] - V[1] ** 2


def K_matrix(sp) -> np.ndarray:
    sp = _as_params(sp)
    if not sp.in_window:
        raise SingularParams(f"K is singular near lambda={sp.lam}")
    d, mu = sp.delta, sp.mu
    F = np.array([[1, 1, 1], [1, EPS3 ** 2, EPS3], [1, EPS3, EPS3 ** 2]])
    S = np.array([[0, 1 / mu, 0], [0, 0, 1], [1, 0, 0]], dtype=complex)
    return (F @ S) / cmath.sqrt(3 * d + 6)


@dataclass(frozen=True)
class QuadricPoint:
    W: tuple
    J0: complex

    @classmethod
    def from_vector(cls, W, sp):
        W = np.asarray(W, dtype=complex)
        return cls(tuple(W), complex(quadratic_form_J(W, _as_params(sp).delta)))


def W_to_p(W, sp, J0=None, sqrtJ0=None):
    """Stereographic line coordinates (p+, p-) of a point on {J = J0}."""
    sp = _as_params(sp)
    if isinstance(W, QuadricPoint):
        J0 = W.J0 if J0 is None else J0
        W = W.W
    W = np.asarray(W, dtype=complex)
    V = np.linalg.solve(K_matrix(sp), W)
    if J0 is None:
        J0 = J_bullet(V)
    s = cmath.sqrt(J0) if sqrtJ0 is None else sqrtJ0
    scale = max(abs(v) for v in V) + abs(s)
    out = []
    for sign in (1, -1):
        num1, den1 = V[1] + sign * 1j * s, V[0]
        num2, den2 = V[2], V[1] - sign * 1j * s
        if abs(den1) > 1e-12 * scale and abs(den1) >= abs(den2):
            out.append(num1 / den1)
        elif abs(den2) > 1e-12 * scale:
            out.append(num2 / den2)
        elif abs(num1) > 1e-12 * scale or abs(num2) > 1e-12 * scale:
            out.append(complex(math.inf))
        else:
            raise Indeterminate("both expressions are 0/0")
    return out[0], out[1]


def p_to_W(pp, pm, J0, sp, sqrtJ0=None) -> QuadricPoint:
    sp = _as_params(sp)
    if pp == pm:
        raise CoincidentCoordinates("p+ = p-")
    s = cmath.sqrt(J0) if sqrtJ0 is None else sqrtJ0
    vec = np.array([1.0, 0.5 * (pp + pm), pp * pm], dtype=complex)
    W = (2j * s / (pp - pm)) * (K_matrix(sp) @ vec)
    return QuadricPoint(tuple(W), complex(J0))


@dataclass(frozen=True)
class MobiusComplex:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if abs(self.det) == 0:
            raise ValueError("singular Moebius map")

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @classmethod
    def from_matrix(cls, m):
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def normalized(self):
        s = cmath.sqrt(self.det)
        return MobiusComplex(self.a / s, self.b / s, self.c / s, self.d / s)

    def __call__(self, p):
        if isinstance(p, complex) and cmath.isinf(p) or (np.isscalar(p) and np.isinf(p)):
            return self.a / self.c if self.c != 0 else complex(math.inf)
        return (self.a * p + self.b) / (self.c * p + self.d)

    def __matmul__(self, other):
        return MobiusComplex.from_matrix(self.matrix() @ other.matrix())

    def inverse(self):
        return MobiusComplex(self.d, -self.b, -self.c, self.a)

    def equals(self, other, tol=1e-10):
        m1 = self.normalized().matrix()
        m2 = other.normalized().matrix()
        return min(np.max(np.abs(m1 - m2)), np.max(np.abs(m1 + m2))) < tol


IDENTITY = MobiusComplex(1, 0, 0, 1)


def chi_of_mobius(m: MobiusComplex, sp) -> np.ndarray:
    """The J-orthogonal matrix whose spinor image is m."""
    a, b, c, d = m.a, m.b, m.c, m.d
    S = np.array([[d * d, 2 * c * d, c * c],
                  [b * d, a * d + b * c, a * c],
                  [b * b, 2 * a * b, a * a]], dtype=complex)
    K = K_matrix(sp)
    return (K @ S @ np.linalg.inv(K)) / m.det


def chi_generators(which: str, sp) -> MobiusComplex:
    sp = _as_params(sp)
    if which in ("D1", "D2", "D3"):
        s = int(which[1])
        return MobiusComplex(0, EPS3 ** (1 - s), 1, 0)
    if which == "D":
        return MobiusComplex(sp.mu, -1, 1, -sp.mu)
    if which in ("DD1", "D1D"):
        return chi_generators("D", sp) @ chi_generators("D1", sp)
    raise ValueError(f"unknown generator {which}")


def chi_DD1(sp) -> MobiusComplex:
    return chi_generators("DD1", sp)


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float


def circle_C(sp):
    """The circle |p - 1/mu|^2 = 1/mu^2 - 1, or None when it is empty."""
    lam = sp.lam if isinstance(sp, SpectralParams) else float(sp)
    mu = math.sqrt((3.0 - lam) / (2.0 * lam))
    r2 = mu ** -2 - 1.0
    if r2 < -1e-15:
        return None
    return Circle(complex(1 / mu), math.sqrt(max(r2, 0.0)))
