"""Poisson ball configurations and Monte Carlo replicates of M_rho(mu).

Only balls that can meet the support box K of mu are drawn: with side
lengths s_i, balls of radius r are kept when their centre falls in
K enlarged by r along every axis, so the radius density is f_rho(r) times
the polynomial prod_i (s_i + 2r).  It is sampled by inverse CDF on the
corresponding mixture of power laws.

Replicates can compress the smallest balls.  When the expected number of
balls exceeds a budget, balls with radius below a cut r_c are not drawn one
by one.  With stable marks, the sum of m_j w_j (w_j the ball masses) is
exactly stable given A = sum |w_j|^alpha, A_s = sum sgn(w_j)|w_j|^alpha and
L = sum w_j; (A, A_s, L) is replaced by a Gaussian vector with the exact
mean and covariance of the compound Poisson sums.  With finite-variance
marks the whole small-ball sum is replaced by its Gaussian counterpart.
Each replicate reports a bound on the characteristic-function error this
causes (``Compression.cf_error_bound``).
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import PowerKernel, radial_integral
from .errors import ResourceGuardError
from .laws import (ExactStable, Gaussian, PointMass, RadiusLaw, TwoSidedPareto, WeightLaw,
                   _tan, mean_field)
from .measures import Measure, unit_ball_volume
from .stats import fmt

MAX_EXPECTED_BALLS = 1e9
DEFAULT_BUDGET = 4000
REPLICATE_CHUNK = 256


# -- streams ---------------------------------------------------------------------------------


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for (seed, key); independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


# -- radius band sampling -------------------------------------------------------------------


def _window_poly(K) -> np.ndarray:
    """Coefficients c_k of prod_i (s_i + 2r) = sum_k c_k r^k."""
    lo, hi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in K)
    poly = np.array([1.0])
    for s in hi - lo:
        poly = np.convolve(poly, [s, 2.0])
    return poly  # poly[k] multiplies r^k


def _band_masses(F: RadiusLaw, poly, r_a: float, r_b: float) -> np.ndarray:
    return np.array([c * F.truncated_moment(k, lo=r_a, hi=r_b) for k, c in enumerate(poly)])


def expected_count(lam: float, F: RadiusLaw, K, delta: float = 0.0, r_max: float = math.inf) -> float:
    """Lambda = lam int_{delta <= r < r_max} prod (s_i + 2r) F(dr)."""
    if lam == 0:
        return 0.0
    return float(lam * _band_masses(F, _window_poly(K), delta, r_max).sum())


def _draw_radii(F: RadiusLaw, poly, r_a: float, r_b: float, n: int, rng) -> np.ndarray:
    lo, hi = F.support
    a, b = max(r_a, lo), min(r_b, hi)
    masses = _band_masses(F, poly, a, b)
    comp = rng.choice(masses.size, size=n, p=masses / masses.sum()) if masses.size > 1 else np.zeros(n, int)
    U = rng.uniform(size=n)
    r = np.empty(n)
    for k in range(masses.size):
        sel = comp == k
        if not np.any(sel):
            continue
        e = k - F.beta
        u = U[sel]
        if e == 0:
            r[sel] = a * (b / a) ** u
        elif math.isinf(b):
            r[sel] = (a ** e * (1 - u)) ** (1 / e)
        else:
            r[sel] = (a ** e + u * (b ** e - a ** e)) ** (1 / e)
    return np.clip(r, a, b)


@dataclass(frozen=True)
class BallSample:
    """Balls (x_j, r_j, m_j) that can meet the window K."""

    centers: np.ndarray
    radii: np.ndarray
    marks: np.ndarray
    window: tuple
    lam: float
    rho: float
    delta: float
    stream_id: tuple = ()

    @property
    def dimension(self) -> int:
        return int(np.atleast_1d(self.window[0]).size)

    def __len__(self):
        return int(self.radii.size)

    def to_csv(self, path) -> None:
        d = self.dimension
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(d)] + ["r", "m"])
            X = self.centers.reshape(-1, d)
            for x, r, m in zip(X, self.radii, self.marks):
                w.writerow([fmt(v) for v in x] + [fmt(r), fmt(m)])


def _band_balls(lam, F, G, K, r_a, r_b, rng):
    lo, hi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in K)
    poly = _window_poly(K)
    Lam = lam * _band_masses(F, poly, max(r_a, F.support[0]), min(r_b, F.support[1])).sum()
    N = int(rng.poisson(Lam)) if Lam > 0 else 0
    r = _draw_radii(F, poly, r_a, r_b, N, rng) if N else np.empty(0)
    U = rng.uniform(size=(N, lo.size))
    x = (lo - r[:, None]) + U * ((hi - lo) + 2 * r[:, None])
    m = np.asarray(G.sample(rng, N), dtype=float) if N else np.empty(0)
    return x, r, m


def sample_balls(lam: float, F_rho: RadiusLaw, G: WeightLaw, K, delta: float, rng,
                 rho: float = math.nan, stream_id: tuple = ()) -> BallSample:
    """Exact draw of the balls with r >= delta whose centre lies in K enlarged by r."""
    if lam < 0:
        raise ValueError("intensity must be nonnegative")
    if F_rho.epsilon == 1 and delta <= 0:
        raise ResourceGuardError("zoom-in radius law has infinitely many small balls; set delta > 0")
    Lam = expected_count(lam, F_rho, K, delta)
    if not math.isfinite(Lam):
        raise ResourceGuardError("expected number of balls is infinite")
    if Lam > MAX_EXPECTED_BALLS:
        raise ResourceGuardError(f"expected {Lam:.3g} balls exceeds the guard of {MAX_EXPECTED_BALLS:.0e} "
                                 f"(lambda={lam:g}, rho={rho:g})")
    d = int(np.atleast_1d(K[0]).size)
    if lam == 0:
        x, r, m = np.empty((0, d)), np.empty(0), np.empty(0)
    else:
        x, r, m = _band_balls(lam, F_rho, G, K, delta, math.inf, rng)
    centers = x[:, 0] if d == 1 else x
    return BallSample(centers, r, m, (np.atleast_1d(K[0]), np.atleast_1d(K[1])), lam, rho, delta, stream_id)


def evaluate_M(mu: Measure, sample: BallSample) -> float:
    """sum_j m_j mu(B(x_j, r_j))."""
    if sample.dimension != mu.dimension:
        raise ValueError("sample and measure dimensions differ")
    if len(sample) == 0:
        return 0.0
    return float(np.sum(sample.marks * mu.ball_mass(sample.centers, sample.radii)))


def truncation_bound(lam: float, F_rho: RadiusLaw, G: WeightLaw, mu: Measure, delta: float) -> float:
    """lam E|m| |mu| c_d int_{r<delta} r^d F_rho(dr): expected |contribution| of dropped balls."""
    if delta <= 0 or lam == 0:
        return 0.0
    d = mu.dimension
    return lam * G.abs_moment(1.0) * mu.total_variation * unit_ball_volume(d) * F_rho.truncated_moment(d, hi=delta)


def choose_delta(lam: float, F_rho: RadiusLaw, G: WeightLaw, mu: Measure, n: float,
                 factor: float = 1e-3) -> float:
    """Largest delta with truncation_bound < factor * n (zoom-in); 0 for zoom-out."""
    if F_rho.epsilon == -1:
        return 0.0
    d, b = mu.dimension, F_rho.beta
    k = lam * G.abs_moment(1.0) * mu.total_variation * unit_ball_volume(d) * F_rho.c_beta / (d - b)
    if k == 0:
        return 0.0
    delta = (0.999 * factor * n / k) ** (1 / (d - b))
    return min(delta, F_rho.support[1])


# -- compression of small balls --------------------------------------------------------------------


@dataclass(frozen=True)
class Compression:
    """Moments of the compressed small-ball band [r_lo, r_cut)."""

    kind: str  # "none", "stable" or "gaussian"
    r_lo: float = 0.0
    r_cut: float = 0.0
    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cov: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    kappa4: float = 0.0
    alpha: float = 2.0
    sigma: float = 0.0
    skew: float = 0.0
    tau: float = 0.0

    def cf_error_bound(self, theta_max: float, n: float) -> float:
        """Bound on |CF error| of the normalized replicate at |theta| <= theta_max."""
        t = abs(theta_max) / n
        if self.kind == "none":
            return 0.0
        if self.kind == "gaussian":
            k2 = self.cov[0, 0]
            third = (self.kappa4 + 3 * k2 * k2) ** 0.75 + 2 * math.sqrt(2 / math.pi) * k2 ** 1.5
            return min(2.0, t ** 3 * third / 6)
        sd = np.sqrt(np.clip(np.diag(self.cov), 0, None))
        c = self.sigma ** self.alpha * t ** self.alpha
        return min(2.0, 2 * (c * (sd[0] + abs(self.skew * _tan(self.alpha)) * sd[1]) + abs(self.tau) * t * sd[2]))


def plan_compression(lam: float, F_rho: RadiusLaw, G: WeightLaw, mu: Measure, delta: float,
                     budget: int | None) -> Compression:
    """Pick r_cut so about ``budget`` balls are drawn explicitly and integrate the band moments."""
    K = mu.support_box
    lo = max(delta, F_rho.support[0])
    total = expected_count(lam, F_rho, K, lo)
    if budget is None or total <= budget or isinstance(G, TwoSidedPareto) or lam == 0:
        return Compression("none", lo, lo)
    a, b = math.log(lo), math.log(F_rho.support[1]) if math.isfinite(F_rho.support[1]) else math.log(lo) + 60
    for _ in range(200):
        mid = 0.5 * (a + b)
        if expected_count(lam, F_rho, K, math.exp(mid)) > budget:
            a = mid
        else:
            b = mid
    r_cut = math.exp(b)
    logw = lambda r: math.log(lam) + F_rho.log_density(r)  # noqa: E731
    st_marks = isinstance(G, ExactStable) and G.alpha < 2
    if st_marks:
        al = G.alpha
        terms = ((al, False), (al, True), (1.0, True),
                 (2 * al, False), (2 * al, True), (al + 1, True), (al + 1, False), (2.0, False))
    else:
        terms = ((1.0, True), (2.0, False), (4.0, False))
    val, _ = radial_integral([mu], PowerKernel(terms), logw, r_lo=lo, r_hi=r_cut,
                             breaks=[lo, r_cut], epsrel=1e-10)
    if st_marks:
        mA, mS, mL, q2a, q2as, qa1s, qa1, q2 = val
        cov = np.array([[q2a, q2as, qa1s],
                        [q2as, q2a, qa1],
                        [qa1s, qa1, q2]])
        return Compression("stable", lo, r_cut, np.array([mA, mS, mL]), cov, 0.0,
                           G.alpha, G.sigma, G.b, G.tau)
    mL, q2, q4 = val
    m1, m2, m4 = G.raw_moment(1), G.raw_moment(2), G.raw_moment(4)
    return Compression("gaussian", lo, r_cut, np.array([m1 * mL]), np.array([[m2 * q2]]), m4 * q4)


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(cov)
    return V * np.sqrt(np.clip(w, 0, None))


def _cms_standard(alpha: float, skew, rng, size):
    """Standard stable draws (scale 1, shift 0) with a per-draw skewness."""
    skew = np.asarray(skew, dtype=float)
    V = rng.uniform(-math.pi / 2, math.pi / 2, size)
    W = rng.standard_exponential(size)
    tb = skew * math.tan(math.pi * alpha / 2)
    B = np.arctan(tb) / alpha
    S = (1 + tb * tb) ** (1 / (2 * alpha))
    aVB = alpha * (V + B)
    return S * np.sin(aVB) / np.cos(V) ** (1 / alpha) * (np.cos(V - aVB) / W) ** ((1 - alpha) / alpha)


def _compressed_draw(comp: Compression, rng) -> float:
    if comp.kind == "none":
        return 0.0
    if comp.kind == "gaussian":
        return float(comp.mean[0] + math.sqrt(max(comp.cov[0, 0], 0.0)) * rng.standard_normal())
    z = comp.mean + _psd_sqrt(comp.cov) @ rng.standard_normal(3)
    A = max(z[0], 0.0)
    As = min(max(z[1], -A), A)
    L = z[2]
    if A == 0:
        return comp.tau * L
    X = float(_cms_standard(comp.alpha, comp.skew * As / A, rng, None))
    return comp.sigma * A ** (1 / comp.alpha) * X + comp.tau * L


# -- replicates ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicateResult:
    values: np.ndarray
    mean: float
    n: float
    delta: float
    truncation_bound: float
    compression: Compression
    expected_balls: float

    def compression_bound(self, theta_max: float) -> float:
        return self.compression.cf_error_bound(theta_max, self.n)


def _replicate_chunk(args):
    mu, lam, F_rho, G, comp, seed, key, start, stop = args
    K = mu.support_box
    d = mu.dimension
    xs, rs, ms, idx = [], [], [], []
    small = np.zeros(stop - start)
    for j, i in enumerate(range(start, stop)):
        rng = stream(seed, *key, i)
        x, r, m = _band_balls(lam, F_rho, G, K, comp.r_cut, math.inf, rng)
        small[j] = _compressed_draw(comp, rng)
        xs.append(x)
        rs.append(r)
        ms.append(m)
        idx.append(np.full(r.size, j))
    r = np.concatenate(rs)
    if r.size:
        x = np.concatenate(xs)
        w = mu.ball_mass(x[:, 0] if d == 1 else x, r)
        big = np.bincount(np.concatenate(idx), weights=np.concatenate(ms) * w, minlength=stop - start)
    else:
        big = np.zeros(stop - start)
    return big + small


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("BALLFIELDS_THREADS", "1") or 1)
    return max(1, int(workers))


def replicate(mu: Measure, lam: float, F_rho: RadiusLaw, G: WeightLaw, n: float, count: int,
              seed: int, key: tuple = (0,), delta: float = 0.0, budget: int | None = DEFAULT_BUDGET,
              workers: int | None = 1) -> ReplicateResult:
    """count i.i.d. draws of (M_rho(mu) - E M_rho(mu)) / n.

    Replicate i uses the stream (seed, *key, i), so values do not depend on
    the number of workers.  ``delta`` truncates small radii (required for
    zoom-in); centering uses the mean of the truncated model.
    """
    if not n > 0:
        raise ValueError("normalization must be positive")
    if count < 1:
        raise ValueError("need at least one replicate")
    if F_rho.epsilon == 1 and delta <= 0:
        raise ResourceGuardError("zoom-in radius law needs a positive truncation delta")
    K = mu.support_box
    lo = max(delta, F_rho.support[0])
    total = expected_count(lam, F_rho, K, lo)
    comp = plan_compression(lam, F_rho, G, mu, delta, budget)
    drawn = expected_count(lam, F_rho, K, comp.r_cut)
    if drawn > MAX_EXPECTED_BALLS:
        raise ResourceGuardError(f"expected {drawn:.3g} balls per replicate exceeds the guard of "
                                 f"{MAX_EXPECTED_BALLS:.0e} (lambda={lam:g})")
    mean = mean_field(lam, F_rho, G, mu, delta=lo) if lam > 0 else 0.0
    tasks = [(mu, lam, F_rho, G, comp, seed, tuple(key), s, min(s + REPLICATE_CHUNK, count))
             for s in range(0, count, REPLICATE_CHUNK)]
    workers = resolve_workers(workers)
    if workers == 1 or len(tasks) == 1:
        parts = [_replicate_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_replicate_chunk, tasks))
    values = (np.concatenate(parts) - mean) / n
    tb = truncation_bound(lam, F_rho, G, mu, delta) / n if F_rho.epsilon == 1 else 0.0
    return ReplicateResult(values, mean, n, delta, tb, comp, total)


def write_values_csv(path, values, column: str = "value") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", column])
        for i, v in enumerate(values):
            w.writerow([i, fmt(v)])
