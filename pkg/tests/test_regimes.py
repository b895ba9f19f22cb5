import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballfields.errors import RegimeError
from ballfields.laws import ExactStable, Gaussian, ParetoTail, PointMass, SmallPower
from ballfields.measures import Atomic, IntervalLebesgue, UniformBox, takenaka_measure
from ballfields.regimes import (ALPHA, GAMMA, INTERMEDIATE, LABELS, STABLE_DEPENDENT, TRIVIAL, RegimeSpec,
                                check_admissible, classify, fbm_variance_check, limit_curve, limit_params,
                                run_convergence)

TWO_BOX = UniformBox((0.0,), (1.0,)) - UniformBox((1.0,), (2.0,))


@pytest.mark.parametrize("beta,eps,theta_lam,label", [
    (1.5, -1, 2.0, STABLE_DEPENDENT),
    (1.5, -1, 1.5, INTERMEDIATE),
    (1.5, -1, 1.0, GAMMA),
    (2.5, -1, 1.0, ALPHA),
    (2.5, -1, 4.0, ALPHA),
    (0.5, 1, 0.3, STABLE_DEPENDENT),
    (0.5, 1, 0.5, INTERMEDIATE),
    (0.5, 1, 0.7, TRIVIAL),
])
def test_classify_examples(beta, eps, theta_lam, label):
    assert classify(1, 1.8, beta, eps, theta_lam).label == label


def test_intermediate_scale():
    reg = classify(1, 1.8, 1.5, -1, 1.5, lam0=2.0)
    assert reg.normalization == "1" and reg.a == pytest.approx(2.0 ** (1 / (1 - 1.5)))
    assert classify(1, 1.8, 0.5, 1, 0.5, lam0=2.0).a == pytest.approx(2.0 ** 2)


@pytest.mark.parametrize("args,match", [
    ((1, 1.0, 1.5, -1, 2.0), r"alpha must lie in \(1,2\]"),
    ((1, 2.5, 1.5, -1, 2.0), r"alpha must lie in \(1,2\]"),
    ((1, 1.5, 1.5, -1, 2.0), "boundary"),
    ((1, 1.8, 0.9, -1, 2.0), "beta > d"),
    ((1, 1.8, 1.2, 1, 2.0), "d-1 < beta < d"),
    ((1, 1.8, 2.5, -1, 0.0), "theta_lam > 0"),
    ((1, 1.8, 1.5, -1, 0.0), "theta_lam > 0"),
    ((1, 1.8, 0.5, 1, 1.5), "no limit theorem"),
    ((1, 1.8, 1.5, 0, 2.0), "zoom direction"),
])
def test_classify_rejects(args, match):
    with pytest.raises(RegimeError, match=match):
        classify(*args)


@settings(max_examples=200, deadline=None)
@given(d=st.integers(1, 3), alpha=st.floats(1.01, 2.0), beta=st.floats(0.05, 7.0),
       eps=st.sampled_from([-1, 1]), theta_lam=st.floats(0.0, 8.0))
def test_classify_total_and_deterministic(d, alpha, beta, eps, theta_lam):
    try:
        reg = classify(d, alpha, beta, eps, theta_lam)
    except RegimeError:
        with pytest.raises(RegimeError):
            classify(d, alpha, beta, eps, theta_lam)
        return
    assert reg.label in LABELS
    assert classify(d, alpha, beta, eps, theta_lam) == reg
    if reg.label == INTERMEDIATE:
        assert theta_lam == beta
    # stable-dependent means lam rho^beta grows along the zoom
    if reg.label == STABLE_DEPENDENT:
        assert eps * (beta - theta_lam) > 0


def test_normalizations():
    lam, rho = 1e6, 1e-3
    cases = {
        (1.5, -1, 2.0): lam ** (1 / 1.8) * rho ** (1.5 / 1.8),
        (1.5, -1, 1.0): lam ** (1 / 1.5) * rho,
        (2.5, -1, 1.0): lam ** (1 / 1.8) * rho,
        (0.5, 1, 0.7): lam ** (1 / 1.8) * rho ** (1 / 1.8),
        (1.5, -1, 1.5): 1.0,
    }
    for (beta, eps, tl), expected in cases.items():
        assert classify(1, 1.8, beta, eps, tl).n(1, 1.8, beta, lam, rho) == pytest.approx(expected)


def test_regime_spec():
    spec = RegimeSpec(1, 1.8, 1.5, -1, 2.0, 2.0)
    assert spec.ladder == (1e-1, 1e-2, 1e-3, 1e-4)
    assert spec.lam(1e-2) == pytest.approx(2e4)
    assert spec.n(1e-2) == pytest.approx((2e4) ** (1 / 1.8) * 1e-2 ** (1.5 / 1.8))
    assert RegimeSpec(1, 1.8, 0.5, 1, 1.0, 0.3).ladder[0] == 10
    with pytest.raises(RegimeError, match="toward the limit"):
        RegimeSpec(1, 1.8, 1.5, -1, 1.0, 2.0, (1e-3, 1e-2))
    with pytest.raises(RegimeError):
        RegimeSpec(1, 1.8, 1.5, -1, 1.0, 2.0, (0.0, -1.0))


def test_check_admissible():
    spec = RegimeSpec(1, 1.8, 1.5, -1, 1.0, 2.0)
    G = ExactStable(1.8, 1.0)
    check_admissible(spec, TWO_BOX, ParetoTail(1.5), G)
    with pytest.raises(RegimeError, match="radius law"):
        check_admissible(spec, TWO_BOX, ParetoTail(1.6), G)
    with pytest.raises(RegimeError, match="attracts"):
        check_admissible(spec, TWO_BOX, ParetoTail(1.5), Gaussian(0.0, 1.0))
    with pytest.raises(RegimeError, match="dimension"):
        check_admissible(spec, UniformBox((0.0, 0.0), (1.0, 1.0)), ParetoTail(1.5), G)
    gam = RegimeSpec(1, 1.8, 1.5, -1, 1.0, 1.0)
    with pytest.raises(RegimeError, match="absolutely continuous"):
        check_admissible(gam, Atomic(points=((0.0,),), weights=(1.0,)), ParetoTail(1.5), G)
    # zoom-in dependent regime: a non-centered measure fails the probe when beta < d
    zin = RegimeSpec(1, 1.8, 0.5, 1, 1.0, 0.3)
    with pytest.raises(RegimeError, match="membership"):
        check_admissible(zin, IntervalLebesgue(1.0), SmallPower(0.5), G)
    check_admissible(zin, takenaka_measure(1.0), SmallPower(0.5), G)


def test_limit_curves():
    theta = np.linspace(-1, 1, 5)
    G = ExactStable(1.8, 1.0, 0.2)
    dep = limit_curve(RegimeSpec(1, 1.8, 1.5, -1, 1.0, 2.0), TWO_BOX, ParetoTail(1.5), G, theta)
    mid = limit_curve(RegimeSpec(1, 1.8, 1.5, -1, 1.0, 1.5), TWO_BOX, ParetoTail(1.5), G, theta)
    for c in (dep, mid):
        assert c.values[2] == 1 and np.all(np.abs(c.values) <= 1 + 1e-12)
    with pytest.raises(RegimeError):
        limit_params(RegimeSpec(1, 1.8, 1.5, -1, 1.0, 1.5), TWO_BOX, ParetoTail(1.5), G)
    with pytest.raises(RegimeError, match="not simulated"):
        limit_curve(RegimeSpec(1, 1.8, 0.5, 1, 1.0, 0.7), TWO_BOX, SmallPower(0.5), G, theta)


def test_fbm_scaling_of_limit():
    # alpha = 2 limit on [0, t] has variance proportional to t^(3 - beta)
    beta = 1.4
    spec = RegimeSpec(1, 2.0, beta, -1, 1.0, 2.0)
    s = [limit_params(spec, IntervalLebesgue(t), ParetoTail(beta), PointMass(1.0)).scale for t in (1.0, 2.0, 4.0)]
    assert (s[1] / s[0]) ** 2 == pytest.approx(2 ** (3 - beta), rel=1e-8)
    assert (s[2] / s[1]) ** 2 == pytest.approx(2 ** (3 - beta), rel=1e-8)


def test_small_convergence_report(tmp_path):
    spec = RegimeSpec(1, 1.8, 1.5, -1, 1.0, 2.0, (1e-1, 1e-2))
    G = ExactStable(1.8, 1.0)
    rep = run_convergence(spec, TWO_BOX, ParetoTail(1.5, 0.1), G, replicates=2000, seed=1)
    assert rep.label == STABLE_DEPENDENT and rep.theta.size == 21
    assert np.all(rep.distances >= 0)
    assert rep.rows[0].radius == pytest.approx(3 / math.sqrt(2000))
    assert abs(limit_curve(spec, TWO_BOX, ParetoTail(1.5, 0.1), G, [0.0]).values[0] - 1) == 0
    path = tmp_path / "conv.csv"
    rep.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "rho,theta,abs_diff,radius,truncation_bound,compression_bound"
    assert len(lines) == 1 + 2 * 21 + 1 and lines[-1].startswith("summary,")
    paths = rep.write_values(tmp_path)
    assert [p.name for p in paths] == ["replicates_0.csv", "replicates_1.csv"]
    again = run_convergence(spec, TWO_BOX, ParetoTail(1.5, 0.1), G, replicates=2000, seed=1)
    assert np.array_equal(again.distances, rep.distances)


def test_fbm_variance_check_small():
    res = fbm_variance_check(1.5, rho=1e-2, replicates=20_000, seed=8)
    assert res.expected_slope == 1.5 and res.hurst == 0.75
    assert res.slope == pytest.approx(1.5, abs=0.06)
    with pytest.raises(RegimeError):
        fbm_variance_check(1.5, G=ExactStable(1.8, 1.0))
    with pytest.raises(RegimeError):
        fbm_variance_check(2.5)
