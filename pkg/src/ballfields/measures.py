"""Signed test measures on R^d and their ball masses.

A measure is evaluated through ``ball_mass(x, r) = mu(B(x, r))`` with open
balls ``B(x, r) = {y : |y - x| < r}``.  Supported variants are finite atomic
measures, constant densities on axis-aligned boxes, the interval Lebesgue
measure ``|. ∩ (0, t)|`` in d = 1, images under similarities
``y -> a * R y + s`` and finite signed combinations of all of these.

Point arguments follow one convention: in d = 1 coordinates are plain arrays
(an optional trailing axis of length one is squeezed); for d >= 2 the last
axis has length d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.spatial.transform import Rotation

SUPPORTED_DIMENSIONS = (1, 2, 3)


_BALL_VOLUMES = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


def unit_ball_volume(d: int) -> float:
    """Volume c_d of the Euclidean unit ball."""
    if d in _BALL_VOLUMES:
        return _BALL_VOLUMES[d]
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _check_dimension(d: int) -> int:
    if d not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"unsupported dimension {d}; expected one of {SUPPORTED_DIMENSIONS}")
    return int(d)


def _as_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if d == 1:
        if x.ndim >= 1 and x.shape[-1] == 1:
            x = x[..., 0]
    elif x.ndim == 0 or x.shape[-1] != d:
        raise ValueError(f"points must have a trailing axis of length {d}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x


def _as_radii(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("radii must be finite")
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    return r


@dataclass(frozen=True)
class Linear1D:
    """Canonical d = 1 form: atoms plus piecewise constant densities.

    Every d = 1 measure reduces to this form, which is what the exact
    one-dimensional integrators work on.
    """

    atom_pos: np.ndarray
    atom_w: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray
    box_c: np.ndarray

    def ball_mass(self, x, r):
        x = np.asarray(x, dtype=float)
        r = np.asarray(r, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape, r.shape))
        for a, w in zip(self.atom_pos, self.atom_w):
            out += w * (np.abs(x - a) < r)
        for lo, hi, c in zip(self.box_lo, self.box_hi, self.box_c):
            out += c * np.clip(np.minimum(x + r, hi) - np.maximum(x - r, lo), 0.0, None)
        return out

    def local_ball_mass(self, anchor, s, r, side: int):
        """One-sided limit of mu(B(x, r)) at x = anchor + s*r.

        Everything is computed relative to ``anchor`` so that radii far below
        or far above the edge spacing lose no precision.  ``side`` is +1 for
        the limit from the right and -1 from the left.
        """
        anchor = np.asarray(anchor, dtype=float)
        s = np.asarray(s, dtype=float)
        out = np.zeros(np.broadcast_shapes(anchor.shape, s.shape))
        lo_r, hi_r = (-1 - s) * r, (1 - s) * r
        for a, w in zip(self.atom_pos, self.atom_w):
            dlt = anchor - a
            if side > 0:
                out += w * ((dlt >= lo_r) & (dlt < hi_r))
            else:
                out += w * ((dlt > lo_r) & (dlt <= hi_r))
        for lo, hi, c in zip(self.box_lo, self.box_hi, self.box_c):
            out += c * np.clip(np.minimum((s + 1) * r, hi - anchor) - np.maximum((s - 1) * r, lo - anchor), 0.0, None)
        return out

    @cached_property
    def edges(self) -> np.ndarray:
        """Sorted unique locations where ball_mass can jump or kink."""
        return np.unique(np.concatenate([self.atom_pos, self.box_lo, self.box_hi]))

    @cached_property
    def critical_radii(self) -> np.ndarray:
        """Radii at which the ordering of the breakpoints e ± r changes."""
        e = self.edges
        if e.size < 2:
            return np.empty(0)
        diff = (e[None, :] - e[:, None])[np.triu_indices(e.size, 1)] / 2.0
        return np.unique(diff[diff > 0])

    @cached_property
    def max_abs_density(self) -> float:
        return float(np.max(np.abs(self.box_c))) if self.box_c.size else 0.0

    def density_segments(self):
        """Piecewise constant density as (left, right, value) arrays."""
        cuts = np.unique(np.concatenate([self.box_lo, self.box_hi]))
        if cuts.size < 2:
            return np.empty(0), np.empty(0), np.empty(0)
        left, right = cuts[:-1], cuts[1:]
        mid = (left + right) / 2
        val = np.zeros_like(mid)
        for lo, hi, c in zip(self.box_lo, self.box_hi, self.box_c):
            val += c * ((mid > lo) & (mid < hi))
        return left, right, val

    def merged_atoms(self):
        if self.atom_pos.size == 0:
            return self.atom_pos, self.atom_w
        pos, inv = np.unique(self.atom_pos, return_inverse=True)
        w = np.zeros(pos.size)
        np.add.at(w, inv, self.atom_w)
        keep = w != 0
        return pos[keep], w[keep]


def _concat_linear(parts: Sequence[tuple[float, Linear1D]]) -> Linear1D:
    cat = lambda name, scale: np.concatenate(  # noqa: E731
        [np.asarray(getattr(p, name), float) * (c if scale else 1.0) for c, p in parts]
        or [np.empty(0)]
    )
    return Linear1D(
        atom_pos=cat("atom_pos", False),
        atom_w=cat("atom_w", True),
        box_lo=cat("box_lo", False),
        box_hi=cat("box_hi", False),
        box_c=cat("box_c", True),
    )


class Measure:
    """Base class for finite signed measures on R^d."""

    dimension: int

    # -- evaluation ----------------------------------------------------------
    def ball_mass(self, x, r):
        """Return mu(B(x, r)), broadcasting over points and radii."""
        d = self.dimension
        x = _as_points(x, d)
        r = _as_radii(r)
        if d == 1:
            return self.linear_1d.ball_mass(x, r)
        return self._ball_mass_nd(x, r)

    def _ball_mass_nd(self, x, r):  # pragma: no cover - overridden
        raise NotImplementedError

    @cached_property
    def linear_1d(self) -> Linear1D:
        if self.dimension != 1:
            raise ValueError("linear_1d is only defined in dimension 1")
        return self._linear_1d()

    def _linear_1d(self) -> Linear1D:  # pragma: no cover - overridden
        raise NotImplementedError

    # -- cached summaries ---------------------------------------------------
    @cached_property
    def total_mass(self) -> float:
        """mu(R^d)."""
        return float(self._total_mass())

    @cached_property
    def total_variation(self) -> float:
        """|mu|(R^d); exact for d = 1 and axis-aligned combinations."""
        return float(self._total_variation())

    @cached_property
    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box K of the support."""
        lo, hi = self._support_box()
        return np.asarray(lo, float), np.asarray(hi, float)

    @property
    def is_centered(self) -> bool:
        return abs(self.total_mass) <= 1e-12 * max(self.total_variation, 1.0)

    @property
    def is_absolutely_continuous(self) -> bool:
        return False

    # -- algebra --------------------------------------------------------------
    def __add__(self, other: "Measure") -> "Combination":
        return Combination.of((1.0, self), (1.0, other))

    def __sub__(self, other: "Measure") -> "Combination":
        return Combination.of((1.0, self), (-1.0, other))

    def __neg__(self) -> "Combination":
        return Combination.of((-1.0, self))

    def __mul__(self, c: float) -> "Combination":
        return Combination.of((float(c), self))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=True)
class Atomic(Measure):
    """Finite sum of weighted Dirac masses."""

    points: tuple
    weights: tuple
    dimension: int = field(default=0)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 1 and len(self.weights) != 1:
            pts = pts.T
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.size:
            raise ValueError("points and weights must have the same length")
        d = self.dimension or pts.shape[1]
        _check_dimension(d)
        if pts.shape[1] != d:
            raise ValueError(f"atoms must be points of R^{d}")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("atoms must be finite")
        object.__setattr__(self, "points", tuple(map(tuple, pts.tolist())))
        object.__setattr__(self, "weights", tuple(w.tolist()))
        object.__setattr__(self, "dimension", d)

    @cached_property
    def _pts(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float).reshape(-1, self.dimension)

    @cached_property
    def _w(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def _linear_1d(self):
        e = np.empty(0)
        return Linear1D(self._pts[:, 0].copy(), self._w.copy(), e, e, e)

    def _ball_mass_nd(self, x, r):
        out = np.zeros(np.broadcast_shapes(x.shape[:-1], r.shape))
        for a, w in zip(self._pts, self._w):
            out += w * (np.linalg.norm(x - a, axis=-1) < r)
        return out

    def _total_mass(self):
        return self._w.sum()

    def _total_variation(self):
        _, inv = np.unique(self._pts, axis=0, return_inverse=True)
        merged = np.zeros(inv.max() + 1 if inv.size else 0)
        np.add.at(merged, inv.ravel(), self._w)
        return np.abs(merged).sum()

    def _support_box(self):
        if self._pts.size == 0:
            z = np.zeros(self.dimension)
            return z, z
        return self._pts.min(axis=0), self._pts.max(axis=0)


def takenaka_measure(z, d: int | None = None) -> Atomic:
    """mu_z = delta_z - delta_0."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    d = d or z.size
    return Atomic(points=(tuple(z), tuple(np.zeros(d))), weights=(1.0, -1.0), dimension=d)


@dataclass(frozen=True, eq=True)
class UniformBox(Measure):
    """Constant density on an axis-aligned box [lower, upper]."""

    lower: tuple
    upper: tuple
    density: float = 1.0
    dimension: int = field(default=0)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box corners must be vectors of equal length")
        d = self.dimension or lo.size
        _check_dimension(d)
        if lo.size != d:
            raise ValueError(f"box corners must lie in R^{d}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and math.isfinite(self.density)):
            raise ValueError("box must be finite")
        if np.any(hi <= lo):
            raise ValueError("box upper corner must exceed lower corner")
        object.__setattr__(self, "lower", tuple(lo.tolist()))
        object.__setattr__(self, "upper", tuple(hi.tolist()))
        object.__setattr__(self, "density", float(self.density))
        object.__setattr__(self, "dimension", d)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    @property
    def is_absolutely_continuous(self) -> bool:
        return True

    def _linear_1d(self):
        e = np.empty(0)
        return Linear1D(e, e, np.array(self.lower), np.array(self.upper), np.array([self.density]))

    def _ball_mass_nd(self, x, r):
        if self.density == 0:
            return np.zeros(np.broadcast_shapes(x.shape[:-1], r.shape))
        if self.dimension == 2:
            return self.density * disk_box_area(x, r, self.lower, self.upper)
        return self.density * ball_box_volume_3d(x, r, self.lower, self.upper)

    def _total_mass(self):
        return self.density * self.volume

    def _total_variation(self):
        return abs(self.density) * self.volume

    def _support_box(self):
        return np.array(self.lower), np.array(self.upper)

    def density_at(self, y) -> np.ndarray:
        y = _as_points(y, self.dimension)
        if self.dimension == 1:
            inside = (y > self.lower[0]) & (y < self.upper[0])
        else:
            inside = np.all((y > np.array(self.lower)) & (y < np.array(self.upper)), axis=-1)
        return self.density * inside


@dataclass(frozen=True, eq=True)
class IntervalLebesgue(UniformBox):
    """Lebesgue measure restricted to (0, t) in d = 1."""

    t: float = 1.0

    def __init__(self, t: float):
        if not (math.isfinite(t) and t > 0):
            raise ValueError("t must be a positive real")
        object.__setattr__(self, "t", float(t))
        UniformBox.__init__(self, lower=(0.0,), upper=(float(t),), density=1.0, dimension=1)


@dataclass(frozen=True, eq=True)
class Image(Measure):
    """Image of ``base`` under y -> scale * R y + shift (R orthogonal)."""

    base: Measure
    rotation: tuple
    scale: float = 1.0
    shift: tuple = ()
    dimension: int = field(default=0)

    def __post_init__(self):
        d = self.base.dimension
        R = np.asarray(self.rotation, dtype=float).reshape(d, d)
        if not np.allclose(R @ R.T, np.eye(d), atol=1e-10):
            raise ValueError("rotation must be an orthogonal matrix")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("dilation factor must be positive")
        s = np.zeros(d) if len(self.shift) == 0 else np.asarray(self.shift, dtype=float)
        object.__setattr__(self, "rotation", tuple(map(tuple, R.tolist())))
        object.__setattr__(self, "shift", tuple(s.tolist()))
        object.__setattr__(self, "dimension", d)

    @cached_property
    def _R(self):
        return np.asarray(self.rotation)

    @property
    def is_absolutely_continuous(self) -> bool:
        return self.base.is_absolutely_continuous

    def _pullback(self, x):
        return ((x - np.asarray(self.shift)) @ self._R) / self.scale

    def _linear_1d(self):
        lin = self.base.linear_1d
        sgn, a, s = self._R[0, 0], self.scale, self.shift[0]
        lo = a * sgn * lin.box_lo + s
        hi = a * sgn * lin.box_hi + s
        return Linear1D(a * sgn * lin.atom_pos + s, lin.atom_w.copy(),
                        np.minimum(lo, hi), np.maximum(lo, hi), lin.box_c / a)

    def _ball_mass_nd(self, x, r):
        return self.base._ball_mass_nd(self._pullback(x), r / self.scale)

    def _total_mass(self):
        return self.base.total_mass

    def _total_variation(self):
        return self.base.total_variation

    def _support_box(self):
        lo, hi = self.base.support_box
        corners = np.array(list(product(*zip(lo, hi))))
        mapped = self.scale * corners @ self._R.T + np.asarray(self.shift)
        return mapped.min(axis=0), mapped.max(axis=0)


@dataclass(frozen=True, eq=True)
class Combination(Measure):
    """Finite signed combination sum_k c_k mu_k."""

    terms: tuple
    dimension: int = field(default=0)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a combination needs at least one term")
        dims = {m.dimension for _, m in self.terms}
        if len(dims) != 1:
            raise ValueError("all terms must share one dimension")
        object.__setattr__(self, "dimension", dims.pop())

    @classmethod
    def of(cls, *terms) -> "Combination":
        flat = []
        for c, m in terms:
            if isinstance(m, Combination):
                flat.extend((c * c2, m2) for c2, m2 in m.terms)
            else:
                flat.append((float(c), m))
        return cls(terms=tuple(flat))

    @property
    def is_absolutely_continuous(self) -> bool:
        return all(m.is_absolutely_continuous for _, m in self.terms)

    def _linear_1d(self):
        return _concat_linear([(c, m.linear_1d) for c, m in self.terms])

    def _ball_mass_nd(self, x, r):
        out = 0.0
        for c, m in self.terms:
            out = out + c * m._ball_mass_nd(x, r)
        return out

    def _total_mass(self):
        return sum(c * m.total_mass for c, m in self.terms)

    def _total_variation(self):
        if self.dimension == 1:
            return linear_total_variation(self.linear_1d)
        if all(isinstance(m, (Atomic, UniformBox)) for _, m in self.terms):
            return _axis_aligned_tv(self.terms)
        # rotated pieces: triangle bound
        return sum(abs(c) * m.total_variation for c, m in self.terms)

    def _support_box(self):
        boxes = [m.support_box for _, m in self.terms]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)


def linear_total_variation(lin: Linear1D) -> float:
    _, w = lin.merged_atoms()
    left, right, val = lin.density_segments()
    return float(np.abs(w).sum() + np.sum(np.abs(val) * (right - left)))


def _axis_aligned_tv(terms) -> float:
    atoms = [(c, m) for c, m in terms if isinstance(m, Atomic)]
    boxes = [(c, m) for c, m in terms if isinstance(m, UniformBox)]
    tv = 0.0
    if atoms:
        merged = Atomic(
            points=tuple(p for _, m in atoms for p in m.points),
            weights=tuple(c * w for c, m in atoms for w in m.weights),
        )
        tv += merged.total_variation
    if boxes:
        d = boxes[0][1].dimension
        cuts = [np.unique([v for _, m in boxes for v in (m.lower[k], m.upper[k])]) for k in range(d)]
        grids = np.meshgrid(*[(c[:-1] + c[1:]) / 2 for c in cuts], indexing="ij")
        mids = np.stack([g.ravel() for g in grids], axis=-1)
        vols = np.prod(np.meshgrid(*[np.diff(c) for c in cuts], indexing="ij"), axis=0).ravel()
        dens = sum(c * m.density_at(mids) for c, m in boxes)
        tv += float(np.sum(np.abs(dens) * vols))
    return tv


# -- group actions ---------------------------------------------------------------


def rotation_matrix(d: int, params) -> np.ndarray:
    """Orthogonal matrix from rotation parameters.

    d = 1: +1 or -1 (reflection); d = 2: an angle in radians; d = 3: a
    rotation vector (axis times angle).  A full d x d orthogonal matrix is
    accepted as well.
    """
    _check_dimension(d)
    p = np.asarray(params, dtype=float)
    if p.shape == (d, d):
        R = p
    elif d == 1:
        if p.size != 1 or abs(abs(float(p.ravel()[0])) - 1) > 1e-12:
            raise ValueError("a d=1 rotation is +1 or -1")
        R = np.array([[np.sign(p.ravel()[0])]])
    elif d == 2:
        c, s = math.cos(float(p)), math.sin(float(p))
        R = np.array([[c, -s], [s, c]])
    else:
        R = Rotation.from_rotvec(p.reshape(3)).as_matrix()
    if not np.allclose(R @ R.T, np.eye(d), atol=1e-10):
        raise ValueError("rotation must be an orthogonal matrix")
    return R


def translate(mu: Measure, s) -> Measure:
    """tau_s mu(A) = mu(A - s)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.size != mu.dimension:
        raise ValueError("shift dimension mismatch")
    return _transform(mu, np.eye(mu.dimension), 1.0, s)


def rotate(mu: Measure, theta) -> Measure:
    """Theta mu(A) = mu(Theta^{-1} A); rotation about the origin."""
    R = rotation_matrix(mu.dimension, theta)
    return _transform(mu, R, 1.0, np.zeros(mu.dimension))


def dilate(mu: Measure, a: float) -> Measure:
    """mu_a(A) = mu(a^{-1} A); total mass is preserved."""
    if not (a > 0 and math.isfinite(a)):
        raise ValueError("dilation factor a must be positive")
    return _transform(mu, np.eye(mu.dimension), float(a), np.zeros(mu.dimension))


def _transform(mu: Measure, R: np.ndarray, a: float, s: np.ndarray) -> Measure:
    d = mu.dimension
    if isinstance(mu, Combination):
        return Combination.of(*[(c, _transform(m, R, a, s)) for c, m in mu.terms])
    if isinstance(mu, Atomic):
        pts = a * mu._pts @ R.T + s
        return Atomic(points=tuple(map(tuple, pts)), weights=mu.weights, dimension=d)
    axis_aligned = d == 1 or np.allclose(R, np.eye(d))
    if isinstance(mu, UniformBox) and axis_aligned:
        lo = a * R @ np.array(mu.lower) + s
        hi = a * R @ np.array(mu.upper) + s
        return UniformBox(tuple(np.minimum(lo, hi)), tuple(np.maximum(lo, hi)),
                          mu.density / a ** d, dimension=d)
    if isinstance(mu, Image):
        R2 = R @ mu._R
        s2 = a * R @ np.asarray(mu.shift) + s
        return Image(mu.base, rotation=R2, scale=a * mu.scale, shift=tuple(s2))
    return Image(mu, rotation=R, scale=a, shift=tuple(s))


# -- geometry kernels ---------------------------------------------------------------


def _disk_quadrant(u, v, r):
    """Area of {p in D(0, r) : p_x < u, p_y < v}, vectorised."""
    U = np.clip(u, -r, r)
    w = np.sqrt(np.clip(r * r - v * v, 0.0, None))

    def H(t):  # integral_0^t sqrt(r^2 - s^2) ds
        t = np.clip(t, -r, r)
        return 0.5 * (t * np.sqrt(np.clip(r * r - t * t, 0.0, None)) + r * r * np.arcsin(np.clip(t / r, -1, 1)))

    x1 = np.clip(U, -r, -w)
    x2 = np.clip(U, -w, w)
    x3 = np.clip(U, w, r)
    middle = v * (x2 + w) + H(x2) - H(-w)
    upper = 2 * (H(x1) - H(-r)) + middle + 2 * (H(x3) - H(w))
    return np.where(v <= -r, 0.0, np.where(v < 0, middle, upper))


def disk_box_area(c, r, lower, upper) -> np.ndarray:
    """Exact area of D(c, r) ∩ [lower, upper] in R^2."""
    c = np.asarray(c, dtype=float)
    r = np.asarray(r, dtype=float)
    x0, y0 = lower
    x1, y1 = upper
    cx, cy = c[..., 0], c[..., 1]
    S = _disk_quadrant
    area = (S(x1 - cx, y1 - cy, r) - S(x0 - cx, y1 - cy, r)
            - S(x1 - cx, y0 - cy, r) + S(x0 - cx, y0 - cy, r))
    return np.clip(area, 0.0, None)


def ball_box_volume_3d(c, r, lower, upper, tol: float = 1e-10) -> np.ndarray:
    """Volume of B(c, r) ∩ box in R^3 by slicing along z.

    Each slice is an exact disk/rectangle area; the z-integral uses adaptive
    quadrature with breakpoints where the slice radius crosses rectangle
    edge and corner distances.
    """
    c = np.asarray(c, dtype=float)
    r = np.asarray(r, dtype=float)
    shape = np.broadcast_shapes(c.shape[:-1], r.shape)
    cb = np.broadcast_to(c, shape + (3,)).reshape(-1, 3)
    rb = np.broadcast_to(r, shape).ravel()
    lo2, hi2 = lower[:2], upper[:2]
    out = np.empty(rb.size)
    for i, (ci, ri) in enumerate(zip(cb, rb)):
        za, zb = max(lower[2], ci[2] - ri), min(upper[2], ci[2] + ri)
        if zb <= za:
            out[i] = 0.0
            continue

        def slice_area(z, ci=ci, ri=ri):
            rho = math.sqrt(max(ri * ri - (z - ci[2]) ** 2, 0.0))
            if rho == 0.0:
                return 0.0
            return float(disk_box_area(ci[:2], rho, lo2, hi2))

        dx = [ci[0] - lo2[0], hi2[0] - ci[0]]
        dy = [ci[1] - lo2[1], hi2[1] - ci[1]]
        dists = [abs(t) for t in dx + dy] + [math.hypot(a, b) for a in dx for b in dy]
        pts = []
        for e in dists:
            if e < ri:
                h = math.sqrt(ri * ri - e * e)
                pts.extend([ci[2] - h, ci[2] + h])
        pts = sorted(p for p in pts if za < p < zb)
        val, _ = integrate.quad(slice_area, za, zb, points=pts or None,
                                epsabs=tol, epsrel=1e-12, limit=200)
        out[i] = val
    return out.reshape(shape)


# -- gamma and the membership probe ----------------------------------------------------


def gamma(mu: Measure, r: float, alpha: float, rtol: float = 1e-6) -> float:
    """gamma(r) = int |mu(B(x, r))|^alpha dx.

    Exact piecewise integration in d = 1; for d >= 2 atomic measures with
    disjoint balls use c_d r^d sum |w|^alpha and everything else goes through
    adaptive cubature over K enlarged by r.
    """
    from ._quadrature import PowerKernel, x_integral

    if not (1 < alpha <= 2):
        raise ValueError("alpha must lie in (1,2]")
    r = float(_as_radii(r))
    if mu.dimension >= 2 and isinstance(mu, Atomic):
        pts = mu._pts
        if pts.shape[0] < 2 or r <= 0.5 * np.min(
            [np.linalg.norm(a - b) for i, a in enumerate(pts) for b in pts[i + 1:]]
        ):
            return unit_ball_volume(mu.dimension) * r ** mu.dimension * float(np.sum(np.abs(mu._w) ** alpha))
    val = x_integral([mu], r, PowerKernel(((alpha, False),)), rtol=rtol)
    return max(float(np.real(val[0])), 0.0)


@dataclass(frozen=True)
class MembershipReport:
    """Power-law diagnostics for gamma(r) at both ends of an r grid."""

    r: np.ndarray
    gamma: np.ndarray
    q_hat: float
    p_hat: float
    alpha: float
    beta: float

    @property
    def q_above_beta(self) -> bool:
        return bool(self.q_hat > self.beta)

    @property
    def p_below_beta(self) -> bool:
        return bool(self.p_hat < self.beta)

    @property
    def plausible_member(self) -> bool:
        return self.q_above_beta and self.p_below_beta


def default_r_grid(decades: float = 3.0, per_decade: int = 8) -> np.ndarray:
    n = int(round(2 * decades * per_decade)) + 1
    return np.logspace(-decades, decades, n)


def membership_probe(mu: Measure, alpha: float, beta: float, r_grid=None) -> MembershipReport:
    """Fit log gamma against log r over the smallest and the largest decade."""
    from .stats import power_fit

    r = default_r_grid() if r_grid is None else np.sort(np.asarray(r_grid, dtype=float))
    if r.size == 0 or r[0] <= 0:
        raise ValueError("r grid must contain positive radii")
    if r[0] > 1e-2 or r[-1] < 1e2:
        raise ValueError("r grid must span at least two decades on each side of 1")
    g = np.array([gamma(mu, ri, alpha) for ri in r])
    if np.any(g <= 0):
        raise ValueError("gamma vanishes on part of the grid; the measure is zero or the grid degenerate")
    small = r <= r[0] * 10 * (1 + 1e-12)
    large = r >= r[-1] / 10 * (1 - 1e-12)
    q_hat = power_fit(r[small], g[small]).slope
    p_hat = power_fit(r[large], g[large]).slope
    return MembershipReport(r=r, gamma=g, q_hat=q_hat, p_hat=p_hat, alpha=float(alpha), beta=float(beta))


def density_power_integrals(mu: Measure, p: float) -> tuple[float, float]:
    """(int |phi|^p, int sgn(phi)|phi|^p) for the density phi of mu.

    Defined for atom-free d = 1 measures and for combinations of
    axis-aligned boxes (or a single dilated/rotated box) in any dimension.
    """
    if not mu.is_absolutely_continuous:
        raise ValueError("measure has no density (atoms present)")
    if mu.dimension == 1:
        left, right, val = mu.linear_1d.density_segments()
        w = right - left
        return float(np.sum(w * np.abs(val) ** p)), float(np.sum(w * np.sign(val) * np.abs(val) ** p))
    if isinstance(mu, UniformBox):
        v = mu.volume
        return v * abs(mu.density) ** p, v * math.copysign(abs(mu.density) ** p, mu.density)
    if isinstance(mu, Image) and isinstance(mu.base, UniformBox):
        a, d = mu.scale, mu.dimension
        base = mu.base
        c = base.density / a ** d
        v = base.volume * a ** d
        return v * abs(c) ** p, v * math.copysign(abs(c) ** p, c)
    if isinstance(mu, Combination) and all(isinstance(m, UniformBox) for _, m in mu.terms):
        boxes = mu.terms
        d = mu.dimension
        cuts = [np.unique([v for _, m in boxes for v in (m.lower[k], m.upper[k])]) for k in range(d)]
        grids = np.meshgrid(*[(c[:-1] + c[1:]) / 2 for c in cuts], indexing="ij")
        mids = np.stack([g.ravel() for g in grids], axis=-1)
        vols = np.prod(np.meshgrid(*[np.diff(c) for c in cuts], indexing="ij"), axis=0).ravel()
        dens = sum(c * m.density_at(mids) for c, m in boxes)
        return float(np.sum(vols * np.abs(dens) ** p)), float(np.sum(vols * np.sign(dens) * np.abs(dens) ** p))
    raise NotImplementedError("density integrals need axis-aligned boxes when d >= 2")
