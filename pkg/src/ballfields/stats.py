"""Empirical characteristic functions, CF distances and power-law fits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

MIN_CF_SAMPLES = 100


@dataclass(frozen=True)
class CFCurve:
    """A characteristic function tabulated on a theta grid."""

    theta: np.ndarray
    values: np.ndarray
    method: str
    error: np.ndarray | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if theta.shape != values.shape:
            raise ValueError("theta grid and CF values differ in shape")
        err = np.zeros(theta.shape) if self.error is None else np.asarray(self.error, float)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "error", np.broadcast_to(err, theta.shape).copy())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "re", "im", "err"])
            for t, v, e in zip(self.theta, self.values, self.error):
                w.writerow([fmt(t), fmt(v.real), fmt(v.imag), fmt(e)])


@dataclass(frozen=True)
class EmpiricalCF:
    """phi_hat(theta) = mean exp(i theta X_k) with a 3/sqrt(n) radius."""

    theta: np.ndarray
    values: np.ndarray
    n: int

    @property
    def radius(self) -> float:
        return 3.0 / np.sqrt(self.n)


def fmt(x: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return "%.17g" % x


def empirical_cf(samples, theta, chunk: int = 1 << 16) -> EmpiricalCF:
    """Empirical CF on a theta grid, accumulated chunkwise in float64."""
    x = np.asarray(samples, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if x.size < MIN_CF_SAMPLES:
        raise ValueError(f"empirical CF needs at least {MIN_CF_SAMPLES} samples, got {x.size}")
    acc = np.zeros(theta.shape, dtype=complex)
    for start in range(0, x.size, chunk):
        block = x[start:start + chunk]
        phase = np.multiply.outer(theta, block)
        acc += np.cos(phase).sum(axis=-1) + 1j * np.sin(phase).sum(axis=-1)
    return EmpiricalCF(theta=theta, values=acc / x.size, n=x.size)


class Distance(NamedTuple):
    value: float
    theta: float


def cf_distance(e: EmpiricalCF | CFCurve, reference: CFCurve) -> Distance:
    """Sup over the shared grid of |phi_hat - phi| and where it is attained."""
    if e.theta.shape != reference.theta.shape or not np.allclose(e.theta, reference.theta, rtol=0, atol=1e-12):
        raise ValueError("theta grids do not match")
    diff = np.abs(np.asarray(e.values) - reference.values)
    k = int(np.argmax(diff))
    return Distance(float(diff[k]), float(e.theta[k]))


class PowerFit(NamedTuple):
    slope: float
    intercept: float
    residual: float


def power_fit(x, y) -> PowerFit:
    """Least squares fit of log y = intercept + slope * log x.

    ``residual`` is the root mean square of the log residuals.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 5:
        raise ValueError("power_fit needs at least 5 matching (x, y) points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power_fit needs positive x and y")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    return PowerFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2))))


def default_theta_grid(cf_abs: Callable[[float], float], n: int = 21, level: float = 0.2,
                       theta_max: float = 1e8) -> np.ndarray:
    """Symmetric grid on [-theta*, theta*] where |phi(theta*)| = level.

    ``cf_abs`` is the modulus of the limit CF; it must decrease from 1 below
    ``level`` somewhere in (0, theta_max).
    """
    hi = 1.0
    while cf_abs(hi) > level:
        hi *= 2.0
        if hi > theta_max:
            raise ValueError("limit CF modulus never drops to the requested level")
    lo = hi / 2.0
    while cf_abs(lo) <= level and lo > 1e-12:
        hi, lo = lo, lo / 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if cf_abs(mid) > level:
            lo = mid
        else:
            hi = mid
    return np.linspace(-hi, hi, n)
