"""Dirichlet problems on planar domains bounded by slits and circles.

Harmonic functions are represented as real parts of sums of analytic
potentials, one family per boundary component:

* straight slit [a, b]: single layers with densities T_k(s)/sqrt(1-s^2),
  which have the closed forms  log h - log(2 rho(zeta))  and  rho(zeta)^k / k;
* curved slit gamma(s): the same densities, integrated by Gauss-Chebyshev
  quadrature, with the log|s - s0| part split off on the arc itself;
* circle bounding a hole: log(z - c) and negative powers (r/(z - c))^k;
* circle enclosing the domain: positive powers ((z - c)/r)^k.

Coefficients are found by least-squares collocation.  Each family carries
at most one "charge" (coefficient of the logarithm), from which fluxes
follow: the outward flux through a hole equals -2 pi times its charge.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverFailure


def _rho(zeta):
    zeta = np.asarray(zeta, dtype=complex)
    s = np.sqrt(zeta - 1) * np.sqrt(zeta + 1)
    r1, r2 = zeta - s, zeta + s
    return np.where(np.abs(r1) <= np.abs(r2), r1, r2)


def cheb_nodes(n):
    k = np.arange(1, n + 1)
    return np.cos((2 * k - 1) * np.pi / (2 * n))


class Component:
    """One boundary component together with its basis family."""

    charged = True

    def n_basis(self):
        raise NotImplementedError

    def default_params(self):
        raise NotImplementedError

    def collocation(self, params=None):
        """Boundary points used as collocation nodes (complex array)."""
        raise NotImplementedError

    def potentials(self, z):
        """Matrix of analytic potentials F_i(z), shape (len(z), n_basis)."""
        raise NotImplementedError

    def derivatives(self, z):
        raise NotImplementedError

    def real_on_self(self, params=None):
        """Re F_i at points of this component given by their parameters."""
        return self.potentials(self.collocation(params)).real


@dataclass
class StraightSlit(Component):
    a: complex
    b: complex
    K: int = 40
    n_col: int = 0

    def __post_init__(self):
        self.a, self.b = complex(self.a), complex(self.b)
        self.mid = 0.5 * (self.a + self.b)
        self.half = 0.5 * (self.b - self.a)
        if self.n_col == 0:
            self.n_col = 2 * self.K

    def n_basis(self):
        return self.K

    def local(self, z):
        return (np.asarray(z, dtype=complex) - self.mid) / self.half

    def param(self, s):
        return self.mid + self.half * np.asarray(s)

    def default_params(self):
        return cheb_nodes(self.n_col)

    def collocation(self, params=None):
        return self.param(self.default_params() if params is None else params)

    def _from_rho(self, r):
        k = np.arange(1, self.K)
        out = np.empty(r.shape + (self.K,), dtype=complex)
        out[..., 0] = np.log(self.half) - np.log(2 * r)
        out[..., 1:] = r[..., None] ** k / k
        return out

    def potentials(self, z):
        return self._from_rho(_rho(self.local(z)))

    def derivatives(self, z):
        zeta = self.local(z)
        r = _rho(zeta)
        sq = 0.5 * (1 / r - r)              # sqrt(zeta^2 - 1) ~ zeta at infinity
        k = np.arange(1, self.K)
        out = np.empty(r.shape + (self.K,), dtype=complex)
        out[..., 0] = 1 / (self.half * sq)
        out[..., 1:] = -(r[..., None] ** k) / (self.half * sq)[..., None]
        return out

    def on_bank(self, s, side):
        """Potentials at param s on the bank side=+1 (left of a->b) or -1."""
        s = np.asarray(s, dtype=float)
        th = np.arccos(np.clip(s, -1, 1))
        r = np.exp(-1j * side * th)
        return self._from_rho(r)

    def derivatives_on_bank(self, s, side):
        s = np.asarray(s, dtype=float)
        th = np.arccos(np.clip(s, -1, 1))
        r = np.exp(-1j * side * th)
        sq = 0.5 * (1 / r - r)
        k = np.arange(1, self.K)
        out = np.empty(r.shape + (self.K,), dtype=complex)
        out[..., 0] = 1 / (self.half * sq)
        out[..., 1:] = -(r[..., None] ** k) / (self.half * sq)[..., None]
        return out

    def real_on_self(self, params=None):
        s = self.default_params() if params is None else params
        return self.on_bank(s, 1).real


@dataclass
class CurvedSlit(Component):
    """Slit gamma(s), s in [-1,1]; gamma must accept numpy arrays."""

    gamma: object
    dgamma: object
    K: int = 40
    M: int = 400
    n_col: int = 0

    def __post_init__(self):
        if self.n_col == 0:
            self.n_col = 2 * self.K
        self.sq = cheb_nodes(self.M)
        self.gq = np.asarray(self.gamma(self.sq), dtype=complex)
        self.gc = complex(self.gamma(np.array([0.0]))[0])
        self.Tq = np.cos(np.outer(np.arccos(self.sq), np.arange(self.K)))

    def n_basis(self):
        return self.K

    def default_params(self):
        return cheb_nodes(self.n_col)

    def collocation(self, params=None):
        s = self.default_params() if params is None else params
        return np.asarray(self.gamma(s), dtype=complex)

    def _chain(self):
        """Quadrature nodes in ascending s with the centre inserted."""
        order = np.argsort(self.sq)
        pos = int(np.searchsorted(self.sq[order], 0.0))
        pts = np.insert(self.gq[order], pos, self.gc)
        return order, pos, pts

    def potentials(self, z):
        # log((z - g_j)/(z - gc)) summed along the slit from the centre, so
        # the imaginary part is continuous off the slit itself
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        order, pos, pts = self._chain()
        D = np.log((z[:, None] - pts[None, 1:]) / (z[:, None] - pts[None, :-1]))
        L = np.zeros((len(z), len(pts)), dtype=complex)
        L[:, pos + 1:] = np.cumsum(D[:, pos:], axis=1)
        L[:, :pos] = -np.cumsum(D[:, :pos][:, ::-1], axis=1)[:, ::-1]
        L = np.delete(L, pos, axis=1)
        out = (L @ self.Tq[order]) / self.M
        out[:, 0] += np.log(z - self.gc)
        return out

    def derivatives(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        D = 1 / (z[:, None] - self.gq[None, :]) - (1 / (z - self.gc))[:, None]
        out = (D @ self.Tq) / self.M
        out[:, 0] += 1 / (z - self.gc)
        return out

    def on_bank(self, s, side):
        """Potentials at gamma(s) on bank side=+1 (left of increasing s) or -1.

        log(gamma(s0) - gamma(s)) is split into the smooth log of the
        difference quotient and log(s0 - s), whose weighted integrals
        against T_k are closed form."""
        s0 = np.atleast_1d(np.asarray(s, dtype=float))
        g0 = np.asarray(self.gamma(s0), dtype=complex)
        d0 = np.asarray(self.dgamma(s0), dtype=complex)
        order = np.argsort(self.sq)
        sa = np.insert(self.sq[order], int(np.searchsorted(self.sq[order], 0.0)), 0.0)
        ga = np.asarray(self.gamma(sa), dtype=complex)
        ic = int(np.flatnonzero(sa == 0.0)[0])
        ds = s0[:, None] - sa[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (g0[:, None] - ga[None, :]) / ds
        g = np.where(np.abs(ds) < 1e-12, d0[:, None], g)
        A = np.unwrap(np.angle(g), axis=1)
        A -= A[:, ic:ic + 1]
        smooth = np.log(np.abs(g)) + 1j * A
        smooth = np.delete(smooth, ic, axis=1)
        out = (smooth @ self.Tq[order]) / self.M
        th = np.arccos(np.clip(s0, -1, 1))
        k = np.arange(1, self.K)
        out[:, 0] += -np.log(2.0) + 1j * side * th
        out[:, 1:] += (-np.cos(np.outer(th, k)) + 1j * side * np.sin(np.outer(th, k))) / k
        # charge term: continuous bank branch anchored near the principal value
        jump = side * np.pi * (s0 < 0)
        a0 = np.angle(np.exp(1j * (np.angle(g[:, ic]) + jump)))
        out[:, 0] += 1j * (a0 - jump)
        return out

    def real_on_self(self, params=None):
        s0 = self.default_params() if params is None else np.asarray(params, dtype=float)
        g0 = np.asarray(self.gamma(s0), dtype=complex)
        d0 = np.asarray(self.dgamma(s0), dtype=complex)
        ds = s0[:, None] - self.sq[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (g0[:, None] - self.gq[None, :]) / ds
        close = np.abs(ds) < 1e-12
        g = np.where(close, d0[:, None], g)
        smooth = (np.log(np.abs(g)) @ self.Tq) / self.M
        k = np.arange(1, self.K)
        sing = np.empty((len(s0), self.K))
        sing[:, 0] = -np.log(2.0)
        sing[:, 1:] = -np.cos(np.outer(np.arccos(s0), k)) / k
        return sing + smooth


@dataclass
class CircleBoundary(Component):
    """Circle |z - c| = r.  outer=True when the domain lies inside it."""

    center: complex
    radius: float
    outer: bool = False
    K: int = 40
    n_col: int = 0

    def __post_init__(self):
        self.center = complex(self.center)
        self.charged = not self.outer
        if self.n_col == 0:
            self.n_col = 4 * self.K + 8

    def n_basis(self):
        return 2 * self.K + (0 if self.outer else 1)

    def default_params(self):
        return 2 * np.pi * (np.arange(self.n_col) + 0.5) / self.n_col

    def collocation(self, params=None):
        t = self.default_params() if params is None else params
        return self.center + self.radius * np.exp(1j * np.asarray(t))

    def _w(self, z):
        w = (np.atleast_1d(np.asarray(z, dtype=complex)) - self.center) / self.radius
        return w if self.outer else 1 / w

    def potentials(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = self._w(z)
        k = np.arange(1, self.K + 1)
        pw = w[:, None] ** k
        cols = [pw, 1j * pw]
        if not self.outer:
            cols.insert(0, np.log(z - self.center)[:, None])
        return np.hstack(cols)

    def derivatives(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = self._w(z)
        k = np.arange(1, self.K + 1)
        if self.outer:
            dw = np.full_like(w, 1 / self.radius)
        else:
            dw = -w ** 2 / self.radius          # d/dz of r/(z-c)
        d = k * w[:, None] ** (k - 1) * dw[:, None]
        cols = [d, 1j * d]
        if not self.outer:
            cols.insert(0, (1 / (z - self.center))[:, None])
        return np.hstack(cols)


@dataclass
class HarmonicSolution:
    domain: "Domain"
    coeffs: np.ndarray          # (n_basis, n_rhs)
    residual: float

    def F(self, z, j=slice(None)):
        """Analytic completion u + i u* at points z (conjugate up to branch)."""
        return self.domain.potential_matrix(z) @ self.coeffs[:, j]

    def dF(self, z, j=slice(None)):
        return self.domain.derivative_matrix(z) @ self.coeffs[:, j]

    def charges(self):
        q = np.zeros((len(self.domain.components), self.coeffs.shape[1]))
        for i, (comp, off) in enumerate(zip(self.domain.components, self.domain.offsets)):
            if comp.charged:
                q[i] = self.coeffs[off]
        return q

    def fluxes(self):
        """Outward flux of each solution through each component, shape (ncomp, nrhs)."""
        q = self.charges()
        flux = -2 * np.pi * q
        for i, comp in enumerate(self.domain.components):
            if not comp.charged:
                flux[i] = 2 * np.pi * q.sum(axis=0)
        return flux


class Domain:
    """Region bounded by the given components.  Without an enclosing circle
    the region contains infinity and the total charge must vanish."""

    def __init__(self, components):
        self.components = list(components)
        outer = [c for c in self.components if isinstance(c, CircleBoundary) and c.outer]
        if len(outer) > 1:
            raise ValueError("at most one enclosing circle")
        self.bounded = bool(outer)
        self.offsets = []
        n = 0
        for c in self.components:
            self.offsets.append(n)
            n += c.n_basis()
        self.n = n + 1            # trailing constant

    def potential_matrix(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        blocks = [c.potentials(z) for c in self.components]
        return np.hstack(blocks + [np.ones((len(z), 1))])

    def derivative_matrix(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        blocks = [c.derivatives(z) for c in self.components]
        return np.hstack(blocks + [np.zeros((len(z), 1))])

    def boundary_rows(self, i, params=None):
        """Rows mapping coefficients to u at points of component i."""
        comp = self.components[i]
        pts = comp.collocation(params)
        block = np.empty((len(pts), self.n))
        for j, other in enumerate(self.components):
            sl = slice(self.offsets[j], self.offsets[j] + other.n_basis())
            if j == i:
                block[:, sl] = comp.real_on_self(params)
            else:
                block[:, sl] = other.potentials(pts).real
        block[:, -1] = 1.0
        return block

    def bank_matrix(self, i, s, side, derivative=False):
        """Rows giving F (or F') on a bank of slit component i at params s."""
        comp = self.components[i]
        s = np.atleast_1d(np.asarray(s, dtype=float))
        pts = comp.collocation(s)
        blocks = []
        for j, other in enumerate(self.components):
            if j == i:
                if derivative:
                    blocks.append(comp.derivatives_on_bank(s, side))
                else:
                    blocks.append(comp.on_bank(s, side))
            else:
                blocks.append(other.derivatives(pts) if derivative else other.potentials(pts))
        last = np.zeros((len(s), 1)) if derivative else np.ones((len(s), 1))
        return np.hstack(blocks + [last])

    def system(self):
        rows, owner = [], []
        for i in range(len(self.components)):
            block = self.boundary_rows(i)
            rows.append(block)
            owner += [i] * len(block)
        return np.vstack(rows), np.array(owner)

    def solve(self, values):
        """values: (ncomp, nrhs) boundary constants; returns HarmonicSolution."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[0] != len(self.components):
            values = values.T
        A, owner = self.system()
        B = values[owner]
        if not self.bounded:
            row = np.zeros(self.n)
            for comp, off in zip(self.components, self.offsets):
                if comp.charged:
                    row[off] = 1.0
            w = 1e3
            A = np.vstack([A, w * row])
            B = np.vstack([B, np.zeros((1, B.shape[1]))])
        scale = np.linalg.norm(A, axis=0)
        scale[scale == 0] = 1.0
        X, *_ = np.linalg.lstsq(A / scale, B, rcond=1e-13)
        X = X / scale[:, None]
        res = float(np.max(np.abs(A @ X - B)))
        if not np.all(np.isfinite(X)):
            raise SolverFailure("non-finite harmonic coefficients")
        return HarmonicSolution(self, X, res)

    def check(self, sol: HarmonicSolution, values, n=97):
        """Sup error of the boundary data on a fresh set of boundary points."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[0] != len(self.components):
            values = values.T
        err = 0.0
        for i, comp in enumerate(self.components):
            if isinstance(comp, CircleBoundary):
                prm = 2 * np.pi * (np.arange(n) + 0.123) / n
            else:
                prm = np.cos(np.pi * (np.arange(n) + 0.31) / n)
            u = self.boundary_rows(i, prm) @ sol.coeffs
            err = max(err, float(np.max(np.abs(u - values[i]))))
        return err

    def period_matrix(self, sol=None):
        """P[j, k] = outward flux of the j-th harmonic measure through k."""
        nc = len(self.components)
        if sol is None:
            sol = self.solve(np.eye(nc))
        return sol.fluxes().T, sol
