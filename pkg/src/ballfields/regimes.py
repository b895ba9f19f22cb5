"""Scaling regimes, normalizations and convergence experiments.

With lambda(rho) = lam0 rho^(-theta_lam), the behaviour of lambda rho^beta
and lambda picks the regime:

=====================  =============================  ==========================
label                  condition                      normalization n(rho)
=====================  =============================  ==========================
stable-dependent       lambda rho^beta -> inf         lambda^(1/a) rho^(beta/a)
intermediate           lambda rho^beta -> a^(d-beta)  1
stable-independent-γ   -> 0, lambda -> inf, d<β<αd    lambda^(d/beta) rho^d
stable-independent-α   beta > alpha d, lambda -> inf  lambda^(1/a) rho^d
trivial-n0             zoom-in, -> 0, lambda rho^d    lambda^(1/a) rho^(d/a)
                       -> inf
=====================  =============================  ==========================

The trivial regime is reported by ``classify`` but has no limit-law
constructor and is not simulated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import RegimeError
from .laws import ParetoTail, PointMass, RadiusLaw, StableParams, WeightLaw
from .limits import (j_cf, stable_cf, z_alpha_params, z_tilde_alpha_params, z_tilde_gamma_params)
from .measures import IntervalLebesgue, Measure, membership_probe
from .simulate import DEFAULT_BUDGET, choose_delta, replicate, write_values_csv
from .stats import CFCurve, default_theta_grid, empirical_cf, fmt

STABLE_DEPENDENT = "stable-dependent"
INTERMEDIATE = "intermediate"
GAMMA = "stable-independent-gamma"
ALPHA = "stable-independent-alpha"
TRIVIAL = "trivial-n0"
LABELS = (STABLE_DEPENDENT, INTERMEDIATE, GAMMA, ALPHA, TRIVIAL)

DEFAULT_ZOOM_OUT_LADDER = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_ZOOM_IN_LADDER = (1e1, 1e2, 1e3, 1e4)


@dataclass(frozen=True)
class Regime:
    label: str
    normalization: str  # "n0", "n1", "n2", "n3" or "1"
    a: float | None = None  # intermediate regime only

    def n(self, d: int, alpha: float, beta: float, lam: float, rho: float) -> float:
        if self.normalization == "n1":
            return lam ** (1 / alpha) * rho ** (beta / alpha)
        if self.normalization == "n2":
            return lam ** (d / beta) * rho ** d
        if self.normalization == "n3":
            return lam ** (1 / alpha) * rho ** d
        if self.normalization == "n0":
            return lam ** (1 / alpha) * rho ** (d / alpha)
        return 1.0


def classify(d: int, alpha: float, beta: float, epsilon: int, theta_lam: float,
             lam0: float = 1.0) -> Regime:
    """Regime of lambda(rho) = lam0 rho^(-theta_lam) as rho -> 0 (epsilon=-1) or inf (+1)."""
    if not (1 < alpha <= 2):
        raise RegimeError("alpha must lie in (1,2]")
    if epsilon not in (-1, 1):
        raise RegimeError("zoom direction must be -1 (zoom-out) or +1 (zoom-in)")
    if not lam0 > 0 or theta_lam < 0:
        raise RegimeError("need lam0 > 0 and theta_lam >= 0")
    if epsilon == -1 and not beta > d:
        raise RegimeError(f"zoom-out needs beta > d, got beta={beta}, d={d}")
    if epsilon == 1 and not (d - 1 < beta < d):
        raise RegimeError(f"zoom-in needs d-1 < beta < d, got beta={beta}, d={d}")
    if math.isclose(beta, alpha * d, rel_tol=1e-12):
        raise RegimeError("beta = alpha*d is a boundary case with no limit theorem")
    # exponent of lambda rho^beta in rho, and its direction of travel
    growth = epsilon * (beta - theta_lam)  # > 0: lambda rho^beta -> inf
    lam_grows = epsilon * (-theta_lam) > 0
    if epsilon == -1:
        if beta > alpha * d:
            if not lam_grows:
                raise RegimeError("alpha regime needs lambda -> infinity (theta_lam > 0)")
            return Regime(ALPHA, "n3")
        if growth > 0:
            return Regime(STABLE_DEPENDENT, "n1")
        if growth == 0:
            return Regime(INTERMEDIATE, "1", lam0 ** (1 / (d - beta)))
        if not lam_grows:
            raise RegimeError("gamma regime needs lambda -> infinity (theta_lam > 0)")
        return Regime(GAMMA, "n2")
    if growth > 0:
        return Regime(STABLE_DEPENDENT, "n1")
    if growth == 0:
        return Regime(INTERMEDIATE, "1", lam0 ** (1 / (d - beta)))
    if theta_lam < d:  # lambda rho^d -> inf
        return Regime(TRIVIAL, "n0")
    raise RegimeError("zoom-in with lambda rho^d bounded has no limit theorem here")


@dataclass(frozen=True)
class RegimeSpec:
    d: int
    alpha: float
    beta: float
    epsilon: int
    lam0: float
    theta_lam: float
    ladder: tuple = ()

    def __post_init__(self):
        ladder = tuple(float(r) for r in (self.ladder or (
            DEFAULT_ZOOM_OUT_LADDER if self.epsilon == -1 else DEFAULT_ZOOM_IN_LADDER)))
        if any(r <= 0 for r in ladder):
            raise RegimeError("ladder radii must be positive")
        steps = np.diff(ladder) * self.epsilon
        if np.any(steps <= 0):
            raise RegimeError("ladder must move toward the limit (decreasing for zoom-out)")
        object.__setattr__(self, "ladder", ladder)

    @property
    def regime(self) -> Regime:
        return classify(self.d, self.alpha, self.beta, self.epsilon, self.theta_lam, self.lam0)

    def lam(self, rho: float) -> float:
        return self.lam0 * rho ** (-self.theta_lam)

    def n(self, rho: float) -> float:
        return self.regime.n(self.d, self.alpha, self.beta, self.lam(rho), rho)


def limit_params(spec: RegimeSpec, mu: Measure, F: RadiusLaw, G: WeightLaw) -> StableParams:
    """Stable marginal of the limit at mu (not available for the intermediate regime)."""
    reg = spec.regime
    st = G.attracting
    if reg.label == STABLE_DEPENDENT:
        return z_alpha_params(mu, st.index, spec.beta, F.c_beta, st.scale, st.skew)
    if reg.label == GAMMA:
        return z_tilde_gamma_params(mu, spec.beta, st.index, F.c_beta, G)
    if reg.label == ALPHA:
        return z_tilde_alpha_params(mu, F, G)
    raise RegimeError(f"regime {reg.label} has no stable marginal")


def limit_curve(spec: RegimeSpec, mu: Measure, F: RadiusLaw, G: WeightLaw, theta) -> CFCurve:
    reg = spec.regime
    if reg.label == TRIVIAL:
        raise RegimeError("trivial-n0 regime is documented but not simulated")
    if reg.label == INTERMEDIATE:
        return j_cf(mu, reg.a, G, spec.beta, F.c_beta, theta)
    return stable_cf(limit_params(spec, mu, F, G), theta)


def limit_theta_grid(spec, mu, F, G, n: int = 21, level: float = 0.2) -> np.ndarray:
    """Default grid with |phi_limit(theta*)| = level."""
    reg = spec.regime
    if reg.label == INTERMEDIATE:
        cf_abs = lambda t: float(abs(limit_curve(spec, mu, F, G, [t]).values[0]))  # noqa: E731
    else:
        p = limit_params(spec, mu, F, G)
        cf_abs = lambda t: float(abs(p.cf(t)))  # noqa: E731
    return default_theta_grid(cf_abs, n=n, level=level)


def check_admissible(spec: RegimeSpec, mu: Measure, F: RadiusLaw, G: WeightLaw,
                     probe: bool = True) -> None:
    """Reject regime/measure/law mismatches before any simulation."""
    if mu.dimension != spec.d:
        raise RegimeError(f"measure dimension {mu.dimension} differs from d={spec.d}")
    if not math.isclose(F.beta, spec.beta, rel_tol=1e-12) or F.epsilon != spec.epsilon:
        raise RegimeError("radius law does not match (beta, epsilon) of the regime")
    if not math.isclose(G.attracting.index, spec.alpha, rel_tol=1e-12):
        raise RegimeError(f"weight law attracts to index {G.attracting.index}, regime has alpha={spec.alpha}")
    label = spec.regime.label
    if label in (GAMMA, ALPHA) and not mu.is_absolutely_continuous:
        raise RegimeError("independently scattered limits need an absolutely continuous measure")
    if label in (STABLE_DEPENDENT, INTERMEDIATE) and probe:
        rep = membership_probe(mu, spec.alpha, spec.beta)
        if not rep.plausible_member:
            raise RegimeError(f"measure fails the membership probe (q_hat={rep.q_hat:.3g}, "
                              f"p_hat={rep.p_hat:.3g}, beta={spec.beta})")


@dataclass(frozen=True)
class ConvergenceRow:
    rho: float
    lam: float
    n: float
    distance: float
    theta_at: float
    radius: float
    truncation_bound: float
    compression_bound: float
    per_theta: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class ConvergenceReport:
    label: str
    theta: np.ndarray
    limit: CFCurve
    rows: list

    @property
    def distances(self) -> np.ndarray:
        return np.array([r.distance for r in self.rows])

    @property
    def final_distance(self) -> float:
        return float(self.rows[-1].distance)

    def inversions(self) -> int:
        return int(np.sum(np.diff(self.distances) > 0))

    def converged(self, threshold: float = 0.05, max_inversions: int = 1) -> bool:
        """Distances decrease up to ``max_inversions`` rises and end below ``threshold``."""
        return self.inversions() <= max_inversions and self.final_distance < threshold

    def to_csv(self, path, threshold: float = 0.05) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "theta", "abs_diff", "radius", "truncation_bound", "compression_bound"])
            for row in self.rows:
                for t, v in zip(self.theta, row.per_theta):
                    w.writerow([fmt(row.rho), fmt(t), fmt(v), fmt(row.radius),
                                fmt(row.truncation_bound), fmt(row.compression_bound)])
            last = self.rows[-1]
            w.writerow(["summary", fmt(last.theta_at), fmt(last.distance), fmt(last.radius),
                        fmt(last.truncation_bound), "converged" if self.converged(threshold) else "not-converged"])

    def write_values(self, directory) -> list:
        """One replicate CSV per ladder point; returns the paths."""
        from pathlib import Path

        paths = []
        for k, row in enumerate(self.rows):
            p = Path(directory) / f"replicates_{k}.csv"
            write_values_csv(p, row.values)
            paths.append(p)
        return paths


def run_convergence(spec: RegimeSpec, mu: Measure, F: RadiusLaw, G: WeightLaw, theta=None,
                    replicates: int = 20000, seed: int = 0, budget: int | None = DEFAULT_BUDGET,
                    workers: int | None = 1, probe: bool = True,
                    delta_factor: float = 1e-3) -> ConvergenceReport:
    """Empirical CF distance to the regime's limit CF at every ladder point.

    Ladder point k uses the replicate streams (seed, k, i).
    """
    check_admissible(spec, mu, F, G, probe=probe)
    if theta is None:
        theta = limit_theta_grid(spec, mu, F, G)
    theta = np.asarray(theta, dtype=float)
    limit = limit_curve(spec, mu, F, G, theta)
    rows = []
    for k, rho in enumerate(spec.ladder):
        lam, n = spec.lam(rho), spec.n(rho)
        Fr = F.rescale(rho)
        delta = choose_delta(lam, Fr, G, mu, n, delta_factor)
        res = replicate(mu, lam, Fr, G, n, replicates, seed, key=(k,), delta=delta,
                        budget=budget, workers=workers)
        e = empirical_cf(res.values, theta)
        diff = np.abs(e.values - limit.values)
        j = int(np.argmax(diff))
        rows.append(ConvergenceRow(rho, lam, n, float(diff[j]), float(theta[j]), e.radius,
                                   res.truncation_bound, res.compression_bound(np.max(np.abs(theta))),
                                   diff, res.values))
    return ConvergenceReport(spec.regime.label, theta, limit, rows)


# -- fractional Brownian motion check ------------------------------------------------------------


@dataclass(frozen=True)
class FbmResult:
    t: np.ndarray
    variance: np.ndarray
    slope: float
    expected_slope: float
    hurst: float


def fbm_variance_check(beta: float, rho: float = 1e-4, t_grid: Sequence[float] = (0.5, 1, 2, 4),
                       replicates: int = 100000, seed: int = 0, G: WeightLaw | None = None,
                       r_min: float = 1.0, budget: int | None = 200, workers: int | None = 1) -> FbmResult:
    """Variance of normalized replicates of mu_t = Lebesgue on [0, t] and its log-log slope in t.

    Uses d = 1, alpha = 2 and lambda = rho^-2 (stable-dependent).  The Gaussian compression of small balls keeps the variance
    exact, so a small ``budget`` is enough.
    """
    G = PointMass(1.0) if G is None else G
    if G.attracting.index != 2:
        raise RegimeError("fBm check needs finite-variance marks (alpha = 2)")
    if not 1 < beta < 2:
        raise RegimeError("fBm check needs beta in (1,2)")
    t = np.asarray(t_grid, dtype=float)
    if t.size < 3 or np.any(t <= 0):
        raise ValueError("need at least 3 positive t values")
    spec = RegimeSpec(1, 2.0, beta, -1, 1.0, 2.0, (rho,))
    F = ParetoTail(beta, r_min)
    lam, n = spec.lam(rho), spec.n(rho)
    Fr = F.rescale(rho)
    var = np.array([np.var(replicate(IntervalLebesgue(ti), lam, Fr, G, n, replicates, seed, key=(k,),
                                     budget=budget, workers=workers).values)
                    for k, ti in enumerate(t)])
    slope = float(np.polyfit(np.log(t), np.log(var), 1)[0])  # the default grid has 4 points
    return FbmResult(t, var, slope, 3 - beta, (3 - beta) / 2)
