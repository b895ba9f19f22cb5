"""Acceptance criteria A1-A14.

Each test records one PASS/FAIL line, printed in the terminal summary.
Monte Carlo criteria use fixed seeds; tolerances are the stated ones.
"""

import json
import math

import numpy as np
import pytest
from scipy import integrate

from ballfields.cli import main
from ballfields.laws import (ExactStable, ParetoTail, PointMass, SmallPower, TwoSidedPareto, bek_check,
                             mean_field, truncated_moment_check)
from ballfields.limits import (b_gamma, j_exponent, sigma_alpha, sigma_gamma, z_alpha_params,
                               z_tilde_alpha_params, zj_bridge)
from ballfields.measures import (IntervalLebesgue, UniformBox, dilate, membership_probe, rotate,
                                 takenaka_measure, translate)
from ballfields.regimes import RegimeSpec, fbm_variance_check, limit_params, run_convergence
from ballfields.simulate import replicate
from ballfields.stats import default_theta_grid, power_fit

TWO_BOX = UniformBox((0.0,), (1.0,)) - UniformBox((1.0,), (2.0,))
TWO_BOX_SPEC = {"type": "combination", "terms": [
    {"coef": 1.0, "measure": {"type": "box", "lower": [0.0], "upper": [1.0]}},
    {"coef": -1.0, "measure": {"type": "box", "lower": [1.0], "upper": [2.0]}}]}
A2_CONFIG = {
    "seed": 2024,
    "dimension": 1,
    "measure": TWO_BOX_SPEC,
    "radius_law": {"type": "pareto_tail", "beta": 1.5, "r_min": 0.1},
    "weight_law": {"type": "stable", "alpha": 1.8, "sigma": 1.0, "b": 0.0},
    "regime": {"alpha": 1.8, "beta": 1.5, "epsilon": -1, "lam0": 1.0, "theta_lam": 2.0,
               "ladder": [1e-1, 1e-2, 1e-3, 1e-4]},
    "replicates": 20000,
}


def _run_a2(tmp_path, name, threads):
    cfg = tmp_path / "a2.json"
    cfg.write_text(json.dumps(A2_CONFIG, indent=2))
    out = tmp_path / name
    assert main(["converge", "--config", str(cfg), "--out", str(out), "--threads", str(threads)]) == 0
    return out


@pytest.fixture(scope="module")
def a2_run(tmp_path_factory):
    return _run_a2(tmp_path_factory.mktemp("a2"), "run1", 1)


def test_a1_mean_formula(record):
    mu, F, G = IntervalLebesgue(1.0), ParetoTail(2.5, 0.05), PointMass(1.0)
    res = replicate(mu, 50.0, F, G, 1.0, 100_000, seed=11, budget=None)
    raw = res.values + res.mean  # uncentered M values
    expected = 50.0 * 2.0 * 1.0 * (2.5 * 0.05 / 1.5) * 1.0  # lam c_1 E[m] int r F(dr) mu(R)
    assert mean_field(50.0, F, G, mu) == pytest.approx(expected, rel=1e-12)
    se = raw.std(ddof=1) / math.sqrt(raw.size)
    z = (raw.mean() - expected) / se
    ok = record("A1", abs(z) < 3, f"mean {raw.mean():.5f} vs closed form {expected:.5f} (z = {z:+.2f})")
    assert ok


def test_a2_stable_dependent(a2_run, record):
    summary = json.loads((a2_run / "manifest.json").read_text())["summary"]
    d = summary["distances"]
    ok = summary["inversions"] <= 1 and summary["final_distance"] < 0.05
    record("A2", ok, f"distances {', '.join(f'{v:.4f}' for v in d)}; inversions {summary['inversions']}")
    assert summary["regime"] == "stable-dependent"
    assert ok


def test_a3_intermediate(record):
    a = 2.0
    spec = RegimeSpec(1, 1.8, 1.5, -1, a ** (1 - 1.5), 1.5, (1e-1, 1e-2, 1e-3, 1e-4))
    assert spec.regime.label == "intermediate" and spec.regime.a == pytest.approx(a)
    rep = run_convergence(spec, TWO_BOX, ParetoTail(1.5, 0.1), ExactStable(1.8, 1.0, 0.0, 0.0),
                          replicates=20000, seed=303)
    ok = rep.final_distance < 0.05
    record("A3", ok, f"distances {', '.join(f'{v:.4f}' for v in rep.distances)} to j_cf(mu, 2)")
    assert ok


def _brute_gamma_exponent(G, beta, c_beta, theta):
    """int_0^inf Psi_G(theta c_1 r) C_beta r^(-1-beta) dr per unit density, in t = log r."""
    def part(fn):
        f = lambda t: fn(G.psi(theta * 2.0 * math.exp(t))) * c_beta * math.exp(-beta * t)  # noqa: E731
        return sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-11, limit=400)[0]
                   for lo, hi in ((-60, -5), (-5, 0), (0, 5), (5, 60)))
    return complex(part(lambda z: float(np.real(z))), part(lambda z: float(np.imag(z))))


def test_a4_gamma_regime(record):
    G = ExactStable(1.8, 1.0, 0.5, 0.0)
    F = ParetoTail(1.5, 1.0)
    mu = UniformBox((0.0,), (1.0,))
    spec = RegimeSpec(1, 1.8, 1.5, -1, 1.0, 0.75, (1e-2, 1e-4, 1e-6, 1e-8))
    assert spec.regime.label == "stable-independent-gamma"
    params = limit_params(spec, mu, F, G)
    # gamma, sigma_gamma and b_gamma against brute-force Psi_G quadrature
    W = _brute_gamma_exponent(G, 1.5, F.c_beta, 1.0)
    g = 1.5
    skew_brute = -W.imag / (W.real * math.tan(math.pi * g / 2))
    sig_brute = (-W.real) ** (1 / g)
    ok_b = (params.index == g and abs(skew_brute - (-b_gamma(G, g))) < 1e-4
            and abs(sig_brute / sigma_gamma(1, 1.5, F.c_beta, G) - 1) < 1e-4)
    rep = run_convergence(spec, mu, F, G, replicates=20000, seed=404)
    ok = ok_b and rep.final_distance < 0.05
    record("A4", ok, f"distances {', '.join(f'{v:.4f}' for v in rep.distances)}; b_gamma {b_gamma(G, g):.6f} "
                     f"vs brute {-skew_brute:.6f}")
    assert ok_b
    assert rep.final_distance < 0.05


def test_a5_alpha_regime(record):
    G = ExactStable(1.5, 1.0, 0.5, 0.0)
    F = ParetoTail(4.0, 1.0)
    mu = UniformBox((0.0,), (1.0,))
    spec = RegimeSpec(1, 1.5, 4.0, -1, 1.0, 1.0, (1e-1, 1e-2, 1e-3, 1e-4))
    assert spec.regime.label == "stable-independent-alpha"
    closed = 1.0 * 2.0 * (4.0 / (4.0 - 1.5)) ** (1 / 1.5)  # sigma c_d (int r^(alpha d) F)^(1/alpha)
    ok_sig = abs(sigma_alpha(F, G, 1) / closed - 1) < 1e-6
    assert z_tilde_alpha_params(mu, F, G).skew == pytest.approx(0.5)
    rep = run_convergence(spec, mu, F, G, replicates=20000, seed=505)
    ok = ok_sig and rep.final_distance < 0.05
    record("A5", ok, f"distances {', '.join(f'{v:.4f}' for v in rep.distances)}; sigma_alpha rel err "
                     f"{abs(sigma_alpha(F, G, 1) / closed - 1):.1e}")
    assert ok_sig
    assert rep.final_distance < 0.05


def test_a6_bridge(record):
    G = ExactStable(1.8, 1.0, 0.0, 0.0)
    st = G.attracting
    p = z_alpha_params(TWO_BOX, 1.8, 1.5, 1.5, st.scale, st.skew)
    theta = default_theta_grid(lambda t: abs(p.cf(t)))
    rows = zj_bridge(TWO_BOX, [10.0, 1e2, 1e3, 1e4], G, 1.5, 1.5, theta)
    d = [r.distance for r in rows]
    ok = all(np.diff(d) < 0) and d[-1] < 0.01
    record("A6", ok, f"distances {', '.join(f'{v:.2e}' for v in d)}")
    assert ok


def test_a7_self_similarity(record):
    alpha, beta = 1.8, 1.5
    base = z_alpha_params(TWO_BOX, alpha, beta, 1.5, 1.0, 0.5)
    ratios = [z_alpha_params(dilate(TWO_BOX, a), alpha, beta, 1.5, 1.0, 0.5).scale
              / (a ** ((1 - beta) / alpha) * base.scale) for a in (0.5, 2.0, 10.0)]
    moved = [z_alpha_params(translate(TWO_BOX, 3.7), alpha, beta, 1.5, 1.0, 0.5),
             z_alpha_params(rotate(TWO_BOX, -1.0), alpha, beta, 1.5, 1.0, 0.5)]
    inv = max(abs(m.scale / base.scale - 1) for m in moved)
    skew_t = abs(moved[0].skew - base.skew)
    ok = all(abs(r - 1) <= 1e-4 for r in ratios) and inv < 1e-5 and skew_t < 1e-5
    record("A7", ok, f"dilation ratios {', '.join(f'{r:.10f}' for r in ratios)}; invariance err {inv:.1e}")
    assert ok


def test_a8_aggregate_similarity(record):
    G = ExactStable(1.8, 1.0, 0.3, 0.0)
    theta = np.linspace(-3, 3, 13)
    e0, _ = j_exponent(TWO_BOX, 1.0, G, 1.5, 1.5, theta)
    errs = []
    for m in (2, 5, 10):
        am = m ** (1 / (1 - 1.5))
        em, _ = j_exponent(dilate(TWO_BOX, am), 1.0, G, 1.5, 1.5, theta)
        nz = theta != 0
        errs.append(float(np.max(np.abs(em[nz] - m * e0[nz]) / np.abs(m * e0[nz]))))
    ok = max(errs) < 1e-4
    record("A8", ok, f"rel errors {', '.join(f'{e:.1e}' for e in errs)}")
    assert ok


def test_a9_takenaka(record):
    beta, alpha = 0.5, 1.8
    z = np.logspace(-1, 1, 9)
    s = [z_alpha_params(takenaka_measure(zi), alpha, beta, 1.0, 1.0, 0.0).scale ** alpha for zi in z]
    slope = power_fit(z, s).slope
    ok = abs(slope - (1 - beta)) <= 0.01
    record("A9", ok, f"slope {slope:.6f} (target {1 - beta})")
    assert ok


@pytest.mark.slow
def test_a10_fbm(record):
    res = fbm_variance_check(1.5, rho=1e-4, t_grid=(0.5, 1, 2, 4), replicates=100_000, seed=1010)
    ok = abs(res.slope - 1.5) <= 0.1
    record("A10", ok, f"slope {res.slope:.4f} (target 3 - beta = 1.5); variances "
                      f"{', '.join(f'{v:.3f}' for v in res.variance)}")
    assert ok


def test_a11_membership(record):
    a = membership_probe(IntervalLebesgue(1.0), 1.5, 1.2)
    b = membership_probe(takenaka_measure(1.0), 1.5, 0.5)
    ok = (abs(a.p_hat - 1) <= 0.05 and abs(a.q_hat - 1.5) <= 0.05
          and abs(b.p_hat) <= 0.05 and abs(b.q_hat - 1) <= 0.05)
    record("A11", ok, f"interval (p, q) = ({a.p_hat:.4f}, {a.q_hat:.4f}); mu_z (p, q) = "
                      f"({b.p_hat:.4f}, {b.q_hat:.4f})")
    assert ok


def test_a12_truncated_moments(record):
    fit = truncated_moment_check(TwoSidedPareto(1.5), np.logspace(2, 4, 9), np.random.default_rng(1212))
    ok = abs(fit.s1 + 0.5) <= 0.05 and abs(fit.s2 - 0.5) <= 0.05
    record("A12", ok, f"slopes (s1, s2) = ({fit.s1:.4f}, {fit.s2:.4f})")
    assert ok


def test_a13_bek(record):
    out = bek_check(ParetoTail(2.5, 1.0), [1e-4], 1.0, 3.0)[0]
    inn = bek_check(SmallPower(0.5, 1.0), [1e4], 0.0, 1.0)[0]
    ok = 0.98 <= out <= 1.02 and 0.98 <= inn <= 1.02
    record("A13", ok, f"zoom-out rho=1e-4: {out:.5f}; zoom-in rho=1e4: {inn:.5f}")
    assert ok


def test_a14_reproducibility(a2_run, tmp_path, record):
    second = _run_a2(tmp_path, "run2", 2)
    names = sorted(p.name for p in a2_run.glob("*.csv"))
    same = [(a2_run / n).read_bytes() == (second / n).read_bytes() for n in names]
    ok = len(names) >= 5 and all(same)
    record("A14", ok, f"{sum(same)}/{len(names)} CSVs byte-identical (threads 1 vs 2)")
    assert ok
