"""Weight laws G, radius laws F and the alpha-stable toolkit.

Stable laws are parameterised throughout by the characteristic function

    exp(-sigma^alpha |theta|^alpha (1 - i b sgn(theta) tan(pi alpha / 2)) + i tau theta),

and ``Psi(u) = exp(iu) - 1 - iu``, ``Psi_G(u) = E Psi(m u)`` for m ~ G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy import integrate, special

from .errors import NumericalError, QuadratureError
from .measures import Measure, unit_ball_volume


def _tan(alpha: float) -> float:
    """tan(pi alpha / 2), exactly 0 at alpha = 2."""
    return 0.0 if alpha == 2 else math.tan(math.pi * alpha / 2)


def _check_alpha(alpha: float) -> float:
    if not (1 < alpha <= 2):
        raise ValueError("alpha must lie in (1,2]")
    return float(alpha)


# -- exp(z) - 1 - i*lin without cancellation ------------------------------------------


def _sin_minus_id(y):
    """sin(y) - y, accurate for small |y|."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 0.05
    ys = np.where(small, y, 0.0)  # keep the series away from huge arguments
    y2 = ys * ys
    series = -ys * y2 / 6 * (1 - y2 / 20 * (1 - y2 / 42 * (1 - y2 / 72)))
    return np.where(small, series, np.sin(y) - y)


def _expm1_less_linear(x, y, lin):
    """exp(x + iy) - 1 - i*lin, where y - lin is small or exact.

    ``x`` and ``y - lin`` are the genuinely nonlinear parts; they are passed in
    separately as (x, y, y - lin) would lose digits for small arguments.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    em = np.expm1(x)
    re = em * np.cos(y) - 2 * np.sin(y / 2) ** 2
    im = em * np.sin(y) + _sin_minus_id(y) + (y - lin)
    return re + 1j * im


def psi(u):
    """Psi(u) = exp(iu) - 1 - iu."""
    u = np.asarray(u, dtype=float)
    return -2 * np.sin(u / 2) ** 2 + 1j * _sin_minus_id(u)


# -- stable parameters -------------------------------------------------------------------


@dataclass(frozen=True)
class StableParams:
    """One-dimensional stable law: index, scale, skewness, shift.

    ``index`` is alpha or gamma in (1, 2].  At index 2 the skewness has no
    effect and is stored as 0.
    """

    index: float
    scale: float
    skew: float = 0.0
    shift: float = 0.0

    def __post_init__(self):
        if not (1 < self.index <= 2):
            raise ValueError("stable index must lie in (1,2]")
        if not (self.scale >= 0 and math.isfinite(self.scale)):
            raise ValueError("stable scale must be finite and nonnegative")
        if not (-1 - 1e-12 <= self.skew <= 1 + 1e-12):
            raise ValueError("stable skewness must lie in [-1,1]")
        if not math.isfinite(self.shift):
            raise ValueError("stable shift must be finite")
        object.__setattr__(self, "index", float(self.index))
        object.__setattr__(self, "scale", float(self.scale))
        skew = 0.0 if self.index == 2 else float(np.clip(self.skew, -1, 1))
        object.__setattr__(self, "skew", skew)
        object.__setattr__(self, "shift", float(self.shift))

    def log_cf(self, theta):
        t = np.asarray(theta, dtype=float)
        a = self.index
        z = -(self.scale ** a) * np.abs(t) ** a * (1 - 1j * self.skew * np.sign(t) * _tan(a))
        return z + 1j * self.shift * t

    def cf(self, theta):
        return np.exp(self.log_cf(theta))


def sample_stable(params: StableParams, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck draws in the package's stable convention.

    At index 2 this is a Gaussian with variance 2 sigma^2.
    """
    a, s, b, t = params.index, params.scale, params.skew, params.shift
    if s == 0:
        return t if size is None else np.full(size, t, dtype=float)
    if a == 2:
        return t + s * math.sqrt(2.0) * rng.standard_normal(size)
    V = rng.uniform(-math.pi / 2, math.pi / 2, size)
    W = rng.standard_exponential(size)
    tb = b * math.tan(math.pi * a / 2)
    B = math.atan(tb) / a
    S = (1 + tb * tb) ** (1 / (2 * a))
    aVB = a * (V + B)
    X = S * np.sin(aVB) / np.cos(V) ** (1 / a) * (np.cos(V - aVB) / W) ** ((1 - a) / a)
    return t + s * X


# -- fractional moments through the characteristic function ---------------------------------


def _abs_moment_const(p: float) -> float:
    """int_0^inf (1 - cos u) u^(-1-p) du."""
    return math.pi / 2 if p == 1 else -math.gamma(-p) * math.cos(math.pi * p / 2)


def _signed_moment_const(p: float) -> float:
    """int_0^inf (sin u - u 1{p>1}) u^(-1-p) du for p in (0, 1) or (1, 2)."""
    return -math.gamma(-p) * math.sin(math.pi * p / 2)


def _cf_moments(psi_fn, mean: float, p: float, scale: float):
    """E|X|^p and E[sgn(X)|X|^p] from Psi_X(t) = phi_X(t) - 1 - i t E[X], 0 < p < 2.

    Uses |x|^p = int (1 - cos tx) t^(-1-p) dt / I_p and the matching sine
    representation of sgn(x)|x|^p.
    """
    def quad0inf(f):
        knots = [0.0, 0.1 * scale, scale, 10 * scale, math.inf]
        total = 0.0
        for a, b in zip(knots[:-1], knots[1:]):
            val, err = integrate.quad(f, a, b, limit=400, epsabs=1e-14, epsrel=1e-10)
            if not math.isfinite(val) or err > 1e-7 * max(abs(val), 1.0):
                raise QuadratureError("fractional moment quadrature failed", estimate=val, error=err)
            total += val
        return total

    absm = quad0inf(lambda t: -float(np.real(psi_fn(t))) * t ** (-1 - p)) / _abs_moment_const(p)
    if p == 1:
        signed = mean
    else:
        lin = 0.0 if p > 1 else mean
        signed = quad0inf(lambda t: (float(np.imag(psi_fn(t))) + lin * t) * t ** (-1 - p)) / _signed_moment_const(p)
    return absm, signed


# -- weight laws -------------------------------------------------------------------------------


class WeightLaw:
    """Mark distribution G."""

    alpha: float

    @property
    def attracting(self) -> StableParams:
        """Stable law attracting centered i.i.d. sums, shift 0."""
        raise NotImplementedError

    def psi(self, u):
        """Psi_G(u) = E[exp(imu) - 1 - imu], vectorised."""
        raise NotImplementedError

    def sample(self, rng, size=None):
        raise NotImplementedError

    def abs_moment(self, p: float) -> float:
        """E|m|^p for 0 < p < alpha (any p > 0 if the law has all moments)."""
        raise NotImplementedError

    def signed_moment(self, p: float) -> float:
        """E[sgn(m)|m|^p]."""
        raise NotImplementedError

    @property
    def is_symmetric(self) -> bool:
        return False

    @property
    def finite_variance(self) -> bool:
        return self.alpha == 2


@dataclass(frozen=True)
class PointMass(WeightLaw):
    m0: float

    def __post_init__(self):
        if not math.isfinite(self.m0):
            raise ValueError("m0 must be finite")
        object.__setattr__(self, "m0", float(self.m0))

    alpha = 2.0

    @property
    def mean(self) -> float:
        return self.m0

    @property
    def attracting(self):
        return StableParams(2.0, abs(self.m0) / math.sqrt(2.0))

    def psi(self, u):
        return psi(self.m0 * np.asarray(u, dtype=float))

    def sample(self, rng, size=None):
        return self.m0 if size is None else np.full(size, self.m0)

    def abs_moment(self, p):
        return abs(self.m0) ** p

    def signed_moment(self, p):
        return math.copysign(abs(self.m0) ** p, self.m0) if self.m0 else 0.0

    def raw_moment(self, k: int) -> float:
        return self.m0 ** k

    @property
    def is_symmetric(self):
        return self.m0 == 0


@dataclass(frozen=True)
class Gaussian(WeightLaw):
    mean: float
    variance: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and self.variance >= 0 and math.isfinite(self.variance)):
            raise ValueError("Gaussian needs a finite mean and a nonnegative variance")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))

    alpha = 2.0

    @property
    def attracting(self):
        return StableParams(2.0, math.sqrt((self.variance + self.mean ** 2) / 2))

    def psi(self, u):
        u = np.asarray(u, dtype=float)
        return _expm1_less_linear(-self.variance * u * u / 2, self.mean * u, self.mean * u)

    def cf(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(1j * self.mean * u - self.variance * u * u / 2)

    def sample(self, rng, size=None):
        return self.mean + math.sqrt(self.variance) * rng.standard_normal(size)

    def abs_moment(self, p):
        if self.variance == 0:
            return abs(self.mean) ** p
        return _cf_moments(self.psi, self.mean, p, 1 / math.sqrt(self.variance))[0] if p < 2 else self._gh(p, False)

    def signed_moment(self, p):
        if self.variance == 0:
            return math.copysign(abs(self.mean) ** p, self.mean) if self.mean else 0.0
        return _cf_moments(self.psi, self.mean, p, 1 / math.sqrt(self.variance))[1] if p < 2 else self._gh(p, True)

    def _gh(self, p, signed):
        # p >= 2: integrate against the density directly
        sd = math.sqrt(self.variance)
        f = (lambda m: np.sign(m) * abs(m) ** p) if signed else (lambda m: abs(m) ** p)
        dens = lambda m: math.exp(-((m - self.mean) ** 2) / (2 * self.variance)) / (sd * math.sqrt(2 * math.pi))  # noqa: E731
        return integrate.quad(lambda m: f(m) * dens(m), -math.inf, math.inf, points=None)[0]

    def raw_moment(self, k: int) -> float:
        m, v = self.mean, self.variance
        return {1: m, 2: v + m * m, 3: m ** 3 + 3 * m * v, 4: m ** 4 + 6 * m * m * v + 3 * v * v}[k]

    @property
    def is_symmetric(self):
        return self.mean == 0


@dataclass(frozen=True)
class ExactStable(WeightLaw):
    alpha: float
    sigma: float
    b: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        _check_alpha(self.alpha)
        StableParams(self.alpha, self.sigma, self.b, self.tau)
        for name in ("alpha", "sigma", "b", "tau"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def params(self) -> StableParams:
        return StableParams(self.alpha, self.sigma, self.b, self.tau)

    @property
    def mean(self) -> float:
        return self.tau

    @property
    def attracting(self):
        if self.alpha == 2:
            return StableParams(2.0, math.sqrt(self.sigma ** 2 + self.tau ** 2 / 2))
        return StableParams(self.alpha, self.sigma, self.b)

    def psi(self, u):
        u = np.asarray(u, dtype=float)
        a = self.alpha
        au = self.sigma ** a * np.abs(u) ** a
        skew = au * self.b * np.sign(u) * _tan(a)
        return _expm1_less_linear(-au, self.tau * u + skew, self.tau * u)

    def cf(self, u):
        return self.params.cf(u)

    def sample(self, rng, size=None):
        return sample_stable(self.params, rng, size)

    def _moments(self, p):
        if p >= self.alpha and self.alpha < 2:
            return math.inf, math.nan
        if self.sigma == 0:
            return abs(self.tau) ** p, math.copysign(abs(self.tau) ** p, self.tau) if self.tau else 0.0
        if p >= 2:
            return Gaussian(self.tau, 2 * self.sigma ** 2)._gh(p, False), Gaussian(self.tau, 2 * self.sigma ** 2)._gh(p, True)
        return _cf_moments(self.psi, self.tau, p, 1 / self.sigma)

    def abs_moment(self, p):
        return self._moments(p)[0]

    def signed_moment(self, p):
        return self._moments(p)[1]

    def raw_moment(self, k: int) -> float:
        if self.alpha < 2:
            raise ValueError("raw moments of order >= alpha are infinite")
        return Gaussian(self.tau, 2 * self.sigma ** 2).raw_moment(k)

    @property
    def is_symmetric(self):
        return self.tau == 0 and (self.b == 0 or self.alpha == 2)


@dataclass(frozen=True)
class TwoSidedPareto(WeightLaw):
    """Density p alpha s^alpha m^(-1-alpha) on m > s, (1-p) alpha s^alpha |m|^(-1-alpha) on m < -s."""

    alpha: float
    scale: float = 1.0
    right_fraction: float = 0.5

    def __post_init__(self):
        if not (1 < self.alpha < 2):
            raise ValueError("TwoSidedPareto alpha must lie in (1,2)")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("TwoSidedPareto scale must be positive")
        if not (0 <= self.right_fraction <= 1):
            raise ValueError("right-tail fraction must lie in [0,1]")
        for name in ("alpha", "scale", "right_fraction"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def mean(self) -> float:
        a, s = self.alpha, self.scale
        return (2 * self.right_fraction - 1) * a * s / (a - 1)

    @property
    def attracting(self):
        a = self.alpha
        sig_a = self.scale ** a * math.gamma(2 - a) * math.cos(math.pi * a / 2) / (1 - a)
        return StableParams(a, sig_a ** (1 / a), 2 * self.right_fraction - 1)

    def abs_moment(self, p):
        if p >= self.alpha:
            return math.inf
        return self.alpha * self.scale ** p / (self.alpha - p)

    def signed_moment(self, p):
        return (2 * self.right_fraction - 1) * self.abs_moment(p)

    def sample(self, rng, size=None):
        U = rng.uniform(size=size)
        mag = self.scale * (1 - U) ** (-1 / self.alpha)
        sign = np.where(rng.uniform(size=size) < self.right_fraction, 1.0, -1.0)
        return mag * sign

    def abs_quantile_tail(self, v):
        """|m| whose survival probability is v."""
        return self.scale * np.asarray(v, dtype=float) ** (-1 / self.alpha)

    def psi(self, u):
        u = np.asarray(u, dtype=float)
        flat = [self._psi_scalar(float(x)) for x in u.ravel()]
        return np.array(flat, dtype=complex).reshape(u.shape)

    def _psi_scalar(self, u: float) -> complex:
        if u == 0:
            return 0j
        R = _pareto_right_psi(self.alpha, abs(u) * self.scale)
        p = self.right_fraction
        val = p * R + (1 - p) * R.conjugate()
        return val if u > 0 else val.conjugate()

    @property
    def is_symmetric(self):
        return self.right_fraction == 0.5

    @property
    def finite_variance(self):
        return False


@lru_cache(maxsize=65536)
def _pareto_right_psi(alpha: float, w: float) -> complex:
    """E Psi(u m) for m ~ Pareto(alpha, scale 1) on (1, inf), with w = u > 0.

    Substituting t = w m gives alpha w^alpha int_w^inf Psi(t) t^(-1-alpha) dt.
    """
    a = alpha
    opts = dict(limit=400, epsabs=1e-13, epsrel=1e-10)
    if w <= 1.0:
        full_re = special.gamma(-a) * math.cos(math.pi * a / 2)
        full_im = -special.gamma(-a) * math.sin(math.pi * a / 2)
        if w < 1e-2:
            # Taylor series of 1 - cos t and sin t - t integrated against t^(-1-a)
            head_re = -(w ** (2 - a) / (2 * (2 - a)) - w ** (4 - a) / (24 * (4 - a))
                        + w ** (6 - a) / (720 * (6 - a)))
            head_im = (-w ** (3 - a) / (6 * (3 - a)) + w ** (5 - a) / (120 * (5 - a))
                       - w ** (7 - a) / (5040 * (7 - a)))
            e1 = e2 = 0.0
        else:
            head_re, e1 = integrate.quad(lambda t: -0.5 * (math.sin(t / 2) / (t / 2)) ** 2 * t ** (1 - a),
                                         0, w, **opts)
            head_im, e2 = integrate.quad(lambda t: float(_sin_minus_id(t)) * t ** (-1 - a), 0, w, **opts)
        re, im, err = full_re - head_re, full_im - head_im, e1 + e2
        return complex(a * w ** a * re, a * w ** a * im) if math.isfinite(re + im) else _bad(re, im, err)
    # oscillatory tails via QAWF on t = w s, power terms in closed form
    c, e1 = integrate.quad(lambda s: s ** (-1 - a), 1.0, math.inf, weight="cos", wvar=w, epsabs=1e-12)
    s_, e2 = integrate.quad(lambda s: s ** (-1 - a), 1.0, math.inf, weight="sin", wvar=w, epsabs=1e-12)
    if not (math.isfinite(c) and math.isfinite(s_)):
        return _bad(c, s_, e1 + e2)
    # a w^a int_w^inf Psi(t) t^(-1-a) dt with int_w^inf cos(t) t^(-1-a) dt = w^-a c
    return complex(a * c - 1.0, a * s_ - a * w / (a - 1))


def _bad(re, im, err):
    raise QuadratureError("Pareto Psi_G quadrature failed", estimate=complex(re, im), error=err)



def psi_G(G: WeightLaw, u):
    """Psi_G(u) = int (exp(imu) - 1 - imu) G(dm)."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("u must be finite")
    return G.psi(u)


def small_theta_equivalent(G: WeightLaw, theta):
    """-sigma^alpha |theta|^alpha (1 - i sgn(theta) tan(pi alpha/2) b) of the attracting law."""
    st = G.attracting
    t = np.asarray(theta, dtype=float)
    a = st.index
    return -(st.scale ** a) * np.abs(t) ** a * (1 - 1j * np.sign(t) * _tan(a) * st.skew)


class TruncatedMomentFit(NamedTuple):
    x: np.ndarray
    tail_first: np.ndarray
    trunc_second: np.ndarray
    trunc_first: np.ndarray
    s1: float
    s2: float


def truncated_moment_check(G: WeightLaw, x_grid, rng: np.random.Generator,
                           n_samples: int = 200_000) -> TruncatedMomentFit:
    """Monte Carlo truncated moments and their log-log slopes.

    Estimates T1(x) = int_{|m|>=x} |m| G(dm), T2(x) = int_{-x}^{x} m^2 G(dm)
    and T0(x) = int_{-x}^{x} m G(dm).  Laws exposing ``abs_quantile_tail``
    are sampled by stratifying the tail probability in dyadic blocks, so far
    tails are resolved with a modest budget; other laws use plain sampling.
    """
    from .stats import power_fit

    if G.alpha >= 2:
        raise ValueError("truncated moment slopes need a heavy-tailed law (alpha < 2)")
    x = np.sort(np.asarray(x_grid, dtype=float))
    if x.size < 5 or x[-1] / x[0] < 100:
        raise ValueError("x grid needs at least 5 points spanning two decades")
    if hasattr(G, "abs_quantile_tail"):
        mags, wts = _stratified_tail(G, x, rng, n_samples)
        sign = np.where(rng.uniform(size=mags.size) < G.right_fraction, 1.0, -1.0)
        m = sign * mags
    else:
        m = np.asarray(G.sample(rng, n_samples))
        wts = np.full(m.size, 1.0 / m.size)
    am = np.abs(m)
    T1 = np.array([np.sum(wts * am * (am >= xi)) for xi in x])
    T2 = np.array([np.sum(wts * m * m * (am <= xi)) for xi in x])
    T0 = np.array([np.sum(wts * m * (am <= xi)) for xi in x])
    if np.any(T1 <= 0) or np.any(T2 <= 0):
        raise NumericalError("insufficient samples to resolve the tail on this grid")
    return TruncatedMomentFit(x, T1, T2, T0, power_fit(x, T1).slope, power_fit(x, T2).slope)


def _stratified_tail(G, x, rng, n):
    v_min = min(1e-3 * (x[0] / x[-1]) ** G.alpha, float((x[-1] / G.scale) ** -G.alpha) * 1e-3)
    K = max(1, int(math.ceil(-math.log2(v_min))))
    per = max(n // (K + 1), 64)
    mags, wts = [], []
    for k in range(K + 1):
        hi = 2.0 ** -k
        lo = 0.0 if k == K else hi / 2
        v = rng.uniform(lo, hi, per)
        v = np.where(v == 0, hi * 1e-300, v)
        mags.append(G.abs_quantile_tail(v))
        wts.append(np.full(per, (hi - lo) / per))
    return np.concatenate(mags), np.concatenate(wts)


WeightLawT = Union[PointMass, Gaussian, ExactStable, TwoSidedPareto]


# -- radius laws --------------------------------------------------------------------------------


def _power_integral(c: float, e: float, lo: float, hi: float) -> float:
    """c * int_lo^hi r^(e-1) dr."""
    if hi <= lo:
        return 0.0
    if e == 0:
        return c * math.log(hi / lo) if lo > 0 else math.inf
    if e < 0 and lo == 0:
        return math.inf
    if e > 0 and math.isinf(hi):
        return math.inf
    hi_t = 0.0 if math.isinf(hi) else hi ** e
    lo_t = lo ** e
    return c * (hi_t - lo_t) / e


class RadiusLaw:
    """Radius measure F with a pure power density c r^(-1-beta) on its support."""

    beta: float

    @property
    def epsilon(self) -> int:
        raise NotImplementedError

    @property
    def c_beta(self) -> float:
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def density(self, r):
        lo, hi = self.support
        r = np.asarray(r, dtype=float)
        inside = (r >= lo) & (r <= hi) & (r > 0)
        return np.where(inside, self.c_beta * np.where(r > 0, r, 1.0) ** (-1 - self.beta), 0.0)

    def log_density(self, r: float) -> float:
        """log f(r); -inf off the support."""
        lo, hi = self.support
        if r < lo or r > hi or r <= 0:
            return -math.inf
        return math.log(self.c_beta) - (1.0 + self.beta) * math.log(r)

    def truncated_moment(self, k: float, lo: float = 0.0, hi: float = math.inf) -> float:
        """int_{lo}^{hi} r^k F(dr)."""
        a, b = self.support
        return _power_integral(self.c_beta, k - self.beta, max(lo, a), min(hi, b))

    def moment(self, k: float) -> float:
        return self.truncated_moment(k)

    def rescale(self, rho: float) -> "RadiusLaw":
        raise NotImplementedError


@dataclass(frozen=True)
class ParetoTail(RadiusLaw):
    """Probability density beta r_min^beta r^(-1-beta) on (r_min, inf); zoom-out."""

    beta: float
    r_min: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive")
        if not (self.r_min > 0 and math.isfinite(self.r_min)):
            raise ValueError("r_min must be positive")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "r_min", float(self.r_min))

    @property
    def epsilon(self):
        return -1

    @property
    def c_beta(self):
        return self.beta * self.r_min ** self.beta

    @property
    def support(self):
        return (self.r_min, math.inf)

    def rescale(self, rho):
        if not rho > 0:
            raise ValueError("rho must be positive")
        return ParetoTail(self.beta, self.r_min * rho)


@dataclass(frozen=True)
class SmallPower(RadiusLaw):
    """Infinite measure with density c_beta r^(-1-beta) on (0, r_max]; zoom-in."""

    beta: float
    r_max: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise ValueError("r_max must be positive")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError("c_beta must be positive")
        for name in ("beta", "r_max", "c"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def epsilon(self):
        return 1

    @property
    def c_beta(self):
        return self.c

    @property
    def support(self):
        return (0.0, self.r_max)

    def rescale(self, rho):
        if not rho > 0:
            raise ValueError("rho must be positive")
        return SmallPower(self.beta, self.r_max * rho, self.c * rho ** self.beta)


def check_radius_law(F: RadiusLaw, d: int) -> None:
    """Zoom-out needs beta > d, zoom-in beta < d; int r^d F must be finite."""
    if F.epsilon == -1 and not F.beta > d:
        raise ValueError(f"zoom-out radius law needs beta > d = {d}")
    if F.epsilon == 1 and not F.beta < d:
        raise ValueError(f"zoom-in radius law needs beta < d = {d}")
    if not math.isfinite(F.moment(d)):
        raise ValueError("radius law needs a finite d-th moment")


def rescale(F: RadiusLaw, rho: float) -> RadiusLaw:
    """F_rho(dr) = f(r/rho) dr / rho."""
    return F.rescale(rho)


def moment_rho(F: RadiusLaw, rho: float, k: float) -> float:
    """int r^k F_rho(dr)."""
    return F.rescale(rho).moment(k)


def mean_field(lam: float, F: RadiusLaw, G: WeightLaw, mu: Measure, delta: float = 0.0) -> float:
    """E M(mu) = lam c_d E[m] int_{r>=delta} r^d F(dr) mu(R^d)."""
    d = mu.dimension
    if mu.total_mass == 0 or G.mean == 0 or lam == 0:
        return 0.0
    mom = F.truncated_moment(d, lo=delta)
    if not math.isfinite(mom):
        raise ValueError("mean is infinite: int r^d F(dr) diverges")
    return lam * unit_ball_volume(d) * G.mean * mom * mu.total_mass


def bek_check(F: RadiusLaw, rho_ladder: Sequence[float], p_prime: float, q_prime: float) -> np.ndarray:
    """Ratios int g dF_rho / (C_beta rho^beta int g(r) r^(-1-beta) dr), g = min(r^q', r^p')."""
    b = F.beta
    if not (p_prime < b < q_prime):
        raise ValueError("need p' < beta < q' for the reference integral to converge")
    ref_int = 1 / (q_prime - b) + 1 / (b - p_prime)
    out = []
    for rho in rho_ladder:
        Fr = F.rescale(rho)
        num = Fr.truncated_moment(q_prime, hi=1.0) + Fr.truncated_moment(p_prime, lo=1.0)
        out.append(num / (F.c_beta * rho ** b * ref_int))
    return np.array(out)
