"""Integration of functionals of ball masses.

Everything the package integrates has the form

    int_0^inf w(r) int_{R^d} f(mu_1(B(x, r)), ..., mu_k(B(x, r))) dx dr

with ``f(0) = 0``.  In d = 1 the inner integral is reduced exactly: for a
fixed radius the ball masses are piecewise linear in x, with breakpoints at
``e +/- r`` for every edge ``e`` of the measures.  Power integrands then have
closed-form antiderivatives on each piece; other integrands are integrated
by Gauss-Legendre on pieces, with a quadratic change of variables towards
any zero of the ball mass so the ``|u|^alpha`` cusp is smoothed out.

The outer integral runs in ``t = log r`` with breakpoints at the radii where
the piece structure changes, using ``scipy.integrate.quad_vec``.
For d >= 2 the inner integral falls back on ``scipy.integrate.cubature``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import QuadratureError

if TYPE_CHECKING:
    from .measures import Linear1D, Measure

_GL_ORDER = 32
_GL_S, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
_GL_S = (_GL_S + 1.0) / 2.0
_GL_W = _GL_W / 2.0


def set_gauss_order(order: int) -> None:
    """Change the per-piece Gauss-Legendre order (used by convergence tests)."""
    global _GL_ORDER, _GL_S, _GL_W
    s, w = np.polynomial.legendre.leggauss(int(order))
    _GL_ORDER, _GL_S, _GL_W = int(order), (s + 1.0) / 2.0, w / 2.0


# -- integrands --------------------------------------------------------------------


class Kernel:
    """Integrand f of the ball masses; ``nmeasures`` inputs, ``shape`` output."""

    nmeasures = 1
    shape: tuple = ()

    def pieces(self, L, U0, U1):
        """Sum over linear pieces; U0/U1 have shape (nmeasures, npieces)."""
        raise NotImplementedError

    def pointwise(self, U):
        """Values at points; U has shape (nmeasures, npoints)."""
        raise NotImplementedError


def _spow(u, p):
    return np.sign(u) * np.abs(u) ** p


@dataclass(frozen=True)
class PowerKernel(Kernel):
    """f(u) = |u|^p or sgn(u)|u|^p for each (p, signed) pair; vector output."""

    terms: tuple  # ((p, signed), ...)

    @property
    def shape(self):
        return (len(self.terms),)

    def pieces(self, L, U0, U1):
        u0, u1 = U0[0], U1[0]
        du = u1 - u0
        flat = du == 0
        safe = np.where(flat, 1.0, du)
        out = np.empty(len(self.terms))
        for k, (p, signed) in enumerate(self.terms):
            if signed:
                F = lambda u: np.abs(u) ** (p + 1) / (p + 1)  # noqa: E731
                f0 = _spow(u0, p)
            else:
                F = lambda u: _spow(u, p + 1) / (p + 1)  # noqa: E731
                f0 = np.abs(u0) ** p
            val = np.where(flat, f0, (F(u1) - F(u0)) / safe)
            out[k] = np.sum(L * val)
        return out

    def pointwise(self, U):
        u = U[0]
        return np.stack([_spow(u, p) if s else np.abs(u) ** p for p, s in self.terms], axis=-1)


@dataclass(frozen=True)
class CovariationKernel(Kernel):
    """f(u1, u2) = u1 sgn(u2) |u2|^(alpha - 1)."""

    alpha: float
    nmeasures = 2
    shape = ()

    def pieces(self, L, U0, U1):
        a = self.alpha
        A0, A1 = U0[0], U1[0]
        B0, B1 = U0[1], U1[1]
        dB = B1 - B0
        flat = dB == 0
        safe = np.where(flat, 1.0, dB)
        Q = (A1 - A0) / safe
        P = A0 - Q * B0

        def G(v):
            return P * np.abs(v) ** a / a + Q * _spow(v, a + 1) / (a + 1)

        val = np.where(flat, 0.5 * (A0 + A1) * _spow(B0, a - 1), (G(B1) - G(B0)) / safe)
        return float(np.sum(L * val))

    def pointwise(self, U):
        return U[0] * _spow(U[1], self.alpha - 1)


@dataclass(frozen=True)
class FunctionKernel(Kernel):
    """Generic f(u) with f(0) = 0, evaluated on arrays; output shape ``shape``."""

    f: Callable
    shape: tuple = ()

    def pieces(self, L, U0, U1):
        u0, u1, L = U0[0], U1[0], L
        # split pieces whose ball mass changes sign
        cross = u0 * u1 < 0
        if np.any(cross):
            frac = u0[cross] / (u0[cross] - u1[cross])
            Lc = L[cross]
            L = np.concatenate([L[~cross], Lc * frac, Lc * (1 - frac)])
            z = np.zeros(frac.size)
            u0, u1 = (np.concatenate([u0[~cross], u0[cross], z]),
                      np.concatenate([u1[~cross], z, u1[cross]]))
        scale = np.abs(u0) + np.abs(u1)
        tiny = 1e-14 * scale
        z0, z1 = np.abs(u0) <= tiny, np.abs(u1) <= tiny
        keep = (scale > 0) & (L > 0)
        total = np.zeros(self.shape, dtype=complex)
        s, w = _GL_S, _GL_W
        # pieces ending at a zero of the ball mass: u = u_far * s^2
        root = keep & (z0 | z1)
        if np.any(root):
            ufar = np.where(z0[root], u1[root], u0[root])
            vals = self.f(ufar[:, None] * s[None, :] ** 2)
            wts = L[root][:, None] * 2 * s[None, :] * w[None, :]
            total = total + np.tensordot(wts, vals, axes=([0, 1], [0, 1]))
        lin = keep & ~(z0 | z1)
        if np.any(lin):
            uu = u0[lin][:, None] + (u1[lin] - u0[lin])[:, None] * s[None, :]
            vals = self.f(uu)
            wts = L[lin][:, None] * w[None, :]
            total = total + np.tensordot(wts, vals, axes=([0, 1], [0, 1]))
        return total

    def pointwise(self, U):
        return self.f(U[0])


# -- inner integral ---------------------------------------------------------------


def linear_pieces(lins: Sequence[Linear1D], r: float):
    """Pieces on which every ball mass is linear in x.

    Breakpoints are e - r and e + r for every edge e; they are kept as
    (edge, sign) pairs so lengths and endpoint values are exact relative to
    the edges.  Returns lengths L (n,) and one-sided endpoint values U0, U1
    of shape (k, n).
    """
    edges = np.unique(np.concatenate([lin.edges for lin in lins]))
    k = len(lins)
    if edges.size == 0:
        return np.empty(0), np.empty((k, 0)), np.empty((k, 0))
    anchor = np.concatenate([edges, edges])
    sign = np.concatenate([-np.ones(edges.size), np.ones(edges.size)])
    order = np.lexsort((sign, anchor, anchor + sign * r))
    anchor, sign = anchor[order], sign[order]
    L = np.diff(anchor) + np.diff(sign) * r
    keep = L > 0
    U0 = np.empty((k, int(keep.sum())))
    U1 = np.empty_like(U0)
    for j, lin in enumerate(lins):
        right = lin.local_ball_mass(anchor[:-1][keep], sign[:-1][keep], r, +1)
        left = lin.local_ball_mass(anchor[1:][keep], sign[1:][keep], r, -1)
        U0[j], U1[j] = right, left
    return L[keep], U0, U1


def x_integral(measures: Sequence[Measure], r: float, kernel: Kernel, rtol: float = 1e-9):
    """int f(mu_1(B(x, r)), ...) dx over R^d."""
    d = measures[0].dimension
    if d == 1:
        lins = [m.linear_1d for m in measures]
        L, U0, U1 = linear_pieces(lins, r)
        if L.size == 0:
            return np.zeros(kernel.shape)
        return kernel.pieces(L, U0, U1)
    return _x_integral_nd(measures, r, kernel, rtol)


def _x_integral_nd(measures, r, kernel, rtol):
    lo = np.min([m.support_box[0] for m in measures], axis=0) - r
    hi = np.max([m.support_box[1] for m in measures], axis=0) + r

    def f(x):
        U = np.stack([m.ball_mass(x, r) for m in measures])
        return kernel.pointwise(U)

    res = integrate.cubature(f, lo, hi, rtol=rtol, atol=1e-12 * np.prod(hi - lo))
    if res.status != "converged":
        raise QuadratureError(
            f"cubature over the window did not converge at r={r:g}",
            estimate=res.estimate, error=res.error,
        )
    return res.estimate


def critical_radii(measures: Sequence[Measure]) -> np.ndarray:
    """Radii where the inner integrand changes form (d = 1 exact; else box scale)."""
    if measures[0].dimension == 1:
        lin = [m.linear_1d for m in measures]
        edges = np.unique(np.concatenate([l.edges for l in lin]))
        if edges.size < 2:
            return np.empty(0)
        diff = (edges[None, :] - edges[:, None])[np.triu_indices(edges.size, 1)] / 2
        return np.unique(diff[diff > 0])
    lo = np.min([m.support_box[0] for m in measures], axis=0)
    hi = np.max([m.support_box[1] for m in measures], axis=0)
    diam = float(np.linalg.norm(hi - lo))
    side = float(np.min(hi - lo)) if np.any(hi > lo) else diam
    return np.unique([v for v in (side / 2, diam / 2, diam) if v > 0])


# -- outer integral ------------------------------------------------------------------


ABS_FLOOR = 1e-300


def radial_integral(
    measures: Sequence[Measure],
    kernel: Kernel,
    log_weight: Callable[[float], float],
    r_lo: float = 0.0,
    r_hi: float = math.inf,
    breaks: Sequence[float] = (),
    epsrel: float = 1e-9,
    epsabs: float = 0.0,
):
    """int_{r_lo}^{r_hi} w(r) x_integral(r) dr, returning (value, error estimate).

    The weight is passed as log w(r) so that power weights can be evaluated
    far into both tails without overflow.  The integral runs in t = log r.
    Raises QuadratureError when quad_vec gives up.
    """
    if not r_hi > r_lo:
        return np.zeros(kernel.shape), 0.0
    pts = np.concatenate([critical_radii(measures), np.asarray(breaks, float)])
    pts = pts[(pts > r_lo) & (pts < r_hi)]
    knots = [math.log(r_lo) if r_lo > 0 else -math.inf]
    knots += sorted(set(np.log(pts).tolist()))
    knots += [math.log(r_hi) if math.isfinite(r_hi) else math.inf]
    zero = np.zeros(kernel.shape)

    def g(t):
        if abs(t) > 700.0:
            return zero
        r = math.exp(t)
        lw = log_weight(r)
        if lw == -math.inf:
            return zero
        val = np.asarray(x_integral(measures, r, kernel))
        m = float(np.max(np.abs(val))) if val.size else 0.0
        if m == 0.0 or not math.isfinite(m):
            return val * 0.0 if m == 0.0 else val
        expo = math.log(m) + lw + t
        if expo < -745.0:
            return zero
        return (val / m) * math.exp(min(expo, 709.0))

    total = 0.0
    err = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if a == b:
            continue
        # quad_vec's test is strict, so an all-zero segment needs a positive floor
        res, e, info = integrate.quad_vec(g, a, b, epsrel=epsrel, epsabs=max(epsabs, ABS_FLOOR),
                                          norm="max", limit=2000, full_output=True)
        if not info.success or not np.all(np.isfinite(res)):
            raise QuadratureError(
                f"radial integral did not converge on log r in [{a:g}, {b:g}]",
                estimate=res, error=e,
            )
        total = total + res
        err += e
    return total, err
