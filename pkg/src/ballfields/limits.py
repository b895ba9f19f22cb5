"""Limit laws of the normalized field and their one-dimensional marginals.

Z_alpha: stable, dependent, control measure sigma^alpha C_beta r^(-1-beta) dr dx.
J:       compensated Poisson integral with intensity C_beta r^(-1-beta) dx dr G(dm).
Z~_gamma and Z~_alpha: independently scattered stable laws of index
beta/d and alpha.

Skewness follows the package convention (see ``laws``); the paper-side
b_gamma, stated for the opposite sign convention, is exposed separately by
``b_gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._quadrature import CovariationKernel, FunctionKernel, PowerKernel, radial_integral
from .errors import QuadratureError, RegimeError
from .laws import RadiusLaw, StableParams, WeightLaw, _tan, sample_stable
from .measures import Measure, density_power_integrals, unit_ball_volume
from .stats import CFCurve

EXPONENT_RTOL = 1e-9


def self_similarity_index(d: int, beta: float, alpha: float) -> float:
    """H = (d - beta) / alpha."""
    return (d - beta) / alpha


def _power_weight(c: float, beta: float):
    """log of c r^(-1-beta)."""
    lc = math.log(c)
    return lambda r: lc - (1.0 + beta) * math.log(r)


def _check_dependent(mu: Measure, alpha: float, beta: float) -> None:
    d = mu.dimension
    if not (1 < alpha <= 2):
        raise ValueError("alpha must lie in (1,2]")
    if not (d - 1 < beta < alpha * d):
        raise RegimeError(f"need d-1 < beta < alpha*d, got d={d}, beta={beta}, alpha={alpha}")
    if beta <= d and not mu.is_centered:
        raise QuadratureError("exponent integral diverges: beta <= d requires a centered measure")


def control_integrals(mu: Measure, alpha: float, beta: float):
    """(int int |mu(B)|^alpha r^(-1-beta), int int sgn(mu(B))|mu(B)|^alpha r^(-1-beta)), error."""
    _check_dependent(mu, alpha, beta)
    val, err = radial_integral([mu], PowerKernel(((alpha, False), (alpha, True))),
                               _power_weight(1.0, beta), epsrel=EXPONENT_RTOL)
    if not np.all(np.isfinite(val)) or val[0] <= 0:
        raise QuadratureError("control integral is not finite and positive", estimate=val, error=err)
    return float(val[0]), float(val[1]), err


def z_alpha_params(mu: Measure, alpha: float, beta: float, c_beta: float, sigma: float,
                   b: float) -> StableParams:
    """Marginal law of Z_alpha(mu)."""
    I_abs, I_sgn, _ = control_integrals(mu, alpha, beta)
    scale = (sigma ** alpha * c_beta * I_abs) ** (1 / alpha)
    skew = 0.0 if alpha == 2 else b * I_sgn / I_abs
    return StableParams(alpha, scale, skew, 0.0)


def covariation(mu1: Measure, mu2: Measure, alpha: float, beta: float, c_beta: float,
                sigma: float) -> float:
    """[Z(mu1), Z(mu2)] = sigma^alpha C_beta int int mu1(B) sgn(mu2(B))|mu2(B)|^(alpha-1) r^(-1-beta)."""
    if mu1.dimension != mu2.dimension:
        raise ValueError("measures live in different dimensions")
    _check_dependent(mu1, alpha, beta)
    _check_dependent(mu2, alpha, beta)
    val, _ = radial_integral([mu1, mu2], CovariationKernel(alpha), _power_weight(1.0, beta),
                             epsrel=EXPONENT_RTOL)
    return float(sigma ** alpha * c_beta * val)


# -- the Poisson limit J ---------------------------------------------------------------


def _psi_kernel(G: WeightLaw, theta: np.ndarray) -> FunctionKernel:
    th = np.asarray(theta, dtype=float)
    return FunctionKernel(lambda u: G.psi(np.multiply.outer(u, th)), shape=th.shape)


def j_exponent(mu: Measure, a: float, G: WeightLaw, beta: float, c_beta: float, theta):
    """C_beta a^(d-beta) int int Psi_G(theta mu(B(x,r))) r^(-1-beta) dr dx, with error."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if not a > 0:
        raise ValueError("a must be positive")
    _check_dependent(mu, G.alpha, beta)
    d = mu.dimension
    val, err = radial_integral([mu], _psi_kernel(G, theta), _power_weight(c_beta * a ** (d - beta), beta),
                               epsrel=EXPONENT_RTOL)
    if not np.all(np.isfinite(val)):
        raise QuadratureError("J exponent is not finite", estimate=val, error=err)
    return val, err


def j_cf(mu: Measure, a: float, G: WeightLaw, beta: float, c_beta: float, theta) -> CFCurve:
    """Characteristic function of J(mu_a)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    expo, err = j_exponent(mu, a, G, beta, c_beta, theta)
    vals = np.exp(expo)
    return CFCurve(theta, vals, "quadrature", np.abs(vals) * err)


@dataclass(frozen=True)
class BridgeRow:
    a: float
    kappa: float
    distance: float
    theta_at: float


def zj_bridge(mu: Measure, kappas, G: WeightLaw, beta: float, c_beta: float, theta) -> list[BridgeRow]:
    """Distance between the CFs of kappa^(-1/alpha) J(mu_a) and Z_alpha(mu), kappa = a^(d-beta).

    The ladder is given in kappa, which must grow; a = kappa^(1/(d-beta)).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = mu.dimension
    st = G.attracting
    ref = stable_cf(z_alpha_params(mu, st.index, beta, c_beta, st.scale, st.skew), theta)
    rows = []
    for kappa in kappas:
        a = kappa ** (1 / (d - beta))
        expo, _ = j_exponent(mu, a, G, beta, c_beta, theta * kappa ** (-1 / st.index))
        dist = np.abs(np.exp(expo) - ref.values)
        k = int(np.argmax(dist))
        rows.append(BridgeRow(float(a), float(kappa), float(dist[k]), float(theta[k])))
    return rows


# -- independently scattered limits ------------------------------------------------------


def i_gamma(g: float) -> float:
    """I_gamma = int_0^inf (1 - cos r) r^(-1-gamma) dr by adaptive quadrature."""
    f = lambda r: 2 * math.sin(r / 2) ** 2 * r ** (-1 - g)  # noqa: E731
    head, e1 = integrate.quad(f, 0, 1, limit=200, epsabs=1e-14, epsrel=1e-12)
    mid, e2 = integrate.quad(lambda r: r ** (-1 - g), 1, math.inf, epsabs=1e-14, epsrel=1e-12)
    osc, e3 = integrate.quad(lambda r: r ** (-1 - g), 1, math.inf, weight="cos", wvar=1.0)
    return head + mid - osc


def b_gamma(G: WeightLaw, g: float) -> float:
    """-int sgn(m)|m|^gamma G / int |m|^gamma G, stated for the "+" skew convention."""
    return -G.signed_moment(g) / G.abs_moment(g)


def sigma_gamma(d: int, beta: float, c_beta: float, G: WeightLaw) -> float:
    g = beta / d
    val = unit_ball_volume(d) ** g * c_beta / d * i_gamma(g) * G.abs_moment(g)
    return val ** (1 / g)


def z_tilde_gamma_params(mu: Measure, beta: float, alpha: float, c_beta: float,
                         G: WeightLaw) -> StableParams:
    """Marginal of the gamma-stable limit, gamma = beta/d, evaluated at the density of mu."""
    d = mu.dimension
    if not (d < beta < alpha * d):
        raise RegimeError(f"gamma regime needs d < beta < alpha*d, got d={d}, beta={beta}, alpha={alpha}")
    g = beta / d
    abs_int, sgn_int = density_power_integrals(mu, g)
    sg = sigma_gamma(d, beta, c_beta, G)
    skew = -b_gamma(G, g) * sgn_int / abs_int
    return StableParams(g, sg * abs_int ** (1 / g), skew if g < 2 else 0.0)


def sigma_alpha(F: RadiusLaw, G: WeightLaw, d: int) -> float:
    """sigma c_d (int r^(alpha d) F(dr))^(1/alpha)."""
    st = G.attracting
    mom = F.moment(st.index * d)
    if not math.isfinite(mom):
        raise RegimeError("int r^(alpha d) F(dr) diverges")
    return st.scale * unit_ball_volume(d) * mom ** (1 / st.index)


def z_tilde_alpha_params(mu: Measure, F: RadiusLaw, G: WeightLaw) -> StableParams:
    """Marginal of the alpha-stable independently scattered limit."""
    d = mu.dimension
    st = G.attracting
    a = st.index
    if not F.beta > a * d:
        raise RegimeError(f"alpha regime needs beta > alpha*d, got beta={F.beta}, alpha*d={a * d}")
    abs_int, sgn_int = density_power_integrals(mu, a)
    scale = sigma_alpha(F, G, d) * abs_int ** (1 / a)
    return StableParams(a, scale, st.skew * sgn_int / abs_int if a < 2 else 0.0)


# -- reference curves ----------------------------------------------------------------------


def stable_cf(params: StableParams, theta) -> CFCurve:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return CFCurve(theta, params.cf(theta), "closed-form")


def sample_limit(params: StableParams, rng: np.random.Generator, size=None):
    return sample_stable(params, rng, size)


def prelimit_log_cf(mu: Measure, lam: float, F_rho: RadiusLaw, G: WeightLaw, n: float, theta,
                    delta: float = 0.0, epsrel: float = 1e-8):
    """log E exp(i theta (M - E M)/n) = lam int int Psi_G(theta mu(B)/n) dx F_rho(dr), r >= delta.

    The exact finite-rho CF of the simulated statistic, used as an oracle.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    lo, hi = F_rho.support
    lo = max(lo, delta)
    if F_rho.epsilon == 1 and lo == 0:
        raise ValueError("zoom-in radius law needs a positive truncation delta")
    val, err = radial_integral([mu], _psi_kernel(G, theta / n), lambda r: math.log(lam) + F_rho.log_density(r),
                               r_lo=lo, r_hi=hi, breaks=[lo, hi], epsrel=epsrel)
    return val, err


def stable_log_cf_params(log_cf_values, theta, index: float) -> tuple[float, float]:
    """Read (scale, skew) off a stable log-CF value at one theta > 0."""
    z = complex(log_cf_values)
    scale = (-z.real) ** (1 / index) / abs(theta)
    skew = 0.0 if index == 2 else z.imag / (-z.real * _tan(index))
    return scale, skew
