import math

import numpy as np
import pytest
from scipy import integrate

from ballfields.errors import ResourceGuardError
from ballfields.laws import ExactStable, Gaussian, ParetoTail, PointMass, SmallPower, mean_field
from ballfields.measures import IntervalLebesgue, UniformBox, takenaka_measure, translate
from ballfields.simulate import (choose_delta, evaluate_M, expected_count, plan_compression, replicate,
                                 sample_balls, stream, truncation_bound, write_values_csv)

UNIT = IntervalLebesgue(1.0)


def _variance_oracle(lam, F, second_moment):
    """lam E[m^2] int int Leb([0,1] cap B(x,r))^2 dx F(dr) by nested quadrature."""

    def inner(r):
        f = lambda x: (min(1.0, x + r) - max(0.0, x - r)) ** 2  # noqa: E731
        pts = sorted({-r, r, 1 - r, 1 + r})
        return sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12)[0] for a, b in zip(pts[:-1], pts[1:]))

    g = lambda r: inner(r) * F.density(r)  # noqa: E731
    lo = F.support[0]
    brk = sorted({lo, max(lo, 0.5), max(lo, 1.0)})
    val = sum(integrate.quad(g, a, b, epsrel=1e-11)[0] for a, b in zip(brk[:-1], brk[1:]))
    val += integrate.quad(g, brk[-1], math.inf, epsrel=1e-11)[0]
    return lam * second_moment * val


def test_expected_count_example():
    # lam int (1 + 2r) F(dr) with E r = beta r_min / (beta - 1)
    F = ParetoTail(2.5, 0.01)
    assert expected_count(100.0, F, ((0.0,), (1.0,))) == pytest.approx(100 * (1 + 2 * 2.5 * 0.01 / 1.5))
    assert expected_count(0.0, F, ((0.0,), (1.0,))) == 0
    # 2d window: (1 + 2r)(2 + 2r)
    m1, m2 = F.moment(1), F.moment(2)
    assert expected_count(3.0, F, ((0.0, 0.0), (1.0, 2.0))) == pytest.approx(3 * (2 + 6 * m1 + 4 * m2))


def test_sample_counts_and_geometry():
    F = ParetoTail(2.5, 0.01)
    K = ((0.0,), (1.0,))
    counts, radii = [], []
    for i in range(2000):
        s = sample_balls(100.0, F, PointMass(1.0), K, 0.0, stream(7, i))
        counts.append(len(s))
        radii.append(s.radii)
        assert np.all(np.abs(s.centers - 0.5) < 0.5 + s.radii)
    lam_k = expected_count(100.0, F, K)
    assert abs(np.mean(counts) - lam_k) < 4 * math.sqrt(lam_k / 2000)
    r = np.concatenate(radii)
    assert r.min() >= 0.01
    # size-biased radius law: P(R > t) proportional to int_t (1 + 2r) F(dr)
    t = 0.02
    tail = (F.truncated_moment(0, lo=t) + 2 * F.truncated_moment(1, lo=t)) / (1 + 2 * F.moment(1))
    assert abs(np.mean(r > t) - tail) < 4 * math.sqrt(tail * (1 - tail) / r.size)


def test_empty_and_zero_marks():
    s = sample_balls(0.0, ParetoTail(2.5), PointMass(1.0), ((0.0,), (1.0,)), 0.0, stream(1))
    assert len(s) == 0 and evaluate_M(UNIT, s) == 0
    res = replicate(UNIT, 4.0, ParetoTail(2.5, 0.2), PointMass(0.0), 1.0, 300, seed=3)
    assert np.all(res.values == 0) and res.mean == 0


def test_evaluate_M_is_linear():
    s = sample_balls(50.0, ParetoTail(1.5, 0.05), Gaussian(0.3, 1.0), ((-1.0,), (3.0,)), 0.0, stream(11))
    m1, m2 = UniformBox((-1.0,), (1.0,)), translate(takenaka_measure(0.5), [1.5])
    assert evaluate_M(m1 + 3 * m2, s) == pytest.approx(evaluate_M(m1, s) + 3 * evaluate_M(m2, s))
    manual = sum(m * float(m1.ball_mass(x, r)) for x, r, m in zip(s.centers, s.radii, s.marks))
    assert evaluate_M(m1, s) == pytest.approx(manual)


@pytest.mark.parametrize("budget", [None, 3])
def test_replicate_moments(budget):
    lam, F, G = 5.0, ParetoTail(2.5, 0.1), Gaussian(1.0, 0.25)
    res = replicate(UNIT, lam, F, G, 1.0, 20_000, seed=17, budget=budget)
    assert res.mean == pytest.approx(mean_field(lam, F, G, UNIT))
    var = _variance_oracle(lam, F, G.raw_moment(2))
    v = res.values
    assert abs(v.mean()) < 4 * math.sqrt(var / v.size)
    assert v.var() == pytest.approx(var, rel=0.06)
    assert (res.compression.kind == "none") == (budget is None)


def test_replicate_is_deterministic_across_workers():
    args = (UNIT, 20.0, ParetoTail(1.5, 0.05), ExactStable(1.8, 1.0, 0.3, 0.0), 3.0, 600)
    a = replicate(*args, seed=5, key=(2,), workers=1)
    b = replicate(*args, seed=5, key=(2,), workers=2)
    assert np.array_equal(a.values, b.values)
    c = replicate(*args, seed=5, key=(3,), workers=1)
    assert not np.array_equal(a.values, c.values)


def test_truncation_bound_and_delta():
    F = SmallPower(0.5, 1.0, 2.0)
    G = Gaussian(0.0, 1.0)
    e1 = G.abs_moment(1.0)
    # lam E|m| |mu| 2 int_0^delta r c r^(-1.5) dr = lam E|m| 4 c delta^0.5
    assert truncation_bound(3.0, F, G, UNIT, 0.04) == pytest.approx(3 * e1 * 4 * 2 * 0.2)
    bounds = [truncation_bound(3.0, F, G, UNIT, d) for d in (1e-4, 1e-3, 1e-2)]
    assert bounds[0] < bounds[1] < bounds[2]
    assert truncation_bound(3.0, F, G, UNIT, 0.0) == 0
    delta = choose_delta(3.0, F, G, UNIT, n=10.0)
    assert truncation_bound(3.0, F, G, UNIT, delta) < 1e-3 * 10
    assert choose_delta(3.0, ParetoTail(2.5), G, UNIT, n=10.0) == 0


def test_compression_plan():
    F, G = ParetoTail(1.5, 1e-3), ExactStable(1.6, 1.0, 0.5, 0.0)
    comp = plan_compression(1e4, F, G, UNIT, 0.0, budget=500)
    assert comp.kind == "stable" and comp.r_cut > 1e-3
    assert expected_count(1e4, F, UNIT.support_box, comp.r_cut) == pytest.approx(500, rel=1e-6)
    assert np.all(np.linalg.eigvalsh(comp.cov) > -1e-12)
    assert comp.cf_error_bound(0.0, 1.0) == 0
    assert plan_compression(1.0, F, G, UNIT, 0.0, budget=None).kind == "none"


def test_guards():
    with pytest.raises(ResourceGuardError):
        sample_balls(1.0, SmallPower(0.5), PointMass(1.0), ((0.0,), (1.0,)), 0.0, stream(1))
    with pytest.raises(ResourceGuardError, match="lambda=1e\\+12"):
        sample_balls(1e12, ParetoTail(2.5), PointMass(1.0), ((0.0,), (1.0,)), 0.0, stream(1), rho=0.5)
    with pytest.raises(ResourceGuardError):
        replicate(UNIT, 1.0, SmallPower(0.5), PointMass(1.0), 1.0, 10, seed=0)
    with pytest.raises(ValueError):
        replicate(UNIT, 1.0, ParetoTail(2.5), PointMass(1.0), 0.0, 10, seed=0)
    with pytest.raises(ValueError):
        sample_balls(-1.0, ParetoTail(2.5), PointMass(1.0), ((0.0,), (1.0,)), 0.0, stream(1))


def test_zoom_in_truncated_sample():
    F = SmallPower(0.5, 1.0)
    s = sample_balls(10.0, F, PointMass(1.0), ((0.0,), (1.0,)), 1e-3, stream(4))
    assert len(s) > 0 and s.radii.min() >= 1e-3 and s.radii.max() <= 1.0


def test_csv_dumps(tmp_path):
    s = sample_balls(5.0, ParetoTail(2.5), Gaussian(0.0, 1.0), ((0.0, 0.0), (1.0, 1.0)), 0.0, stream(9))
    p = tmp_path / "balls.csv"
    s.to_csv(p)
    rows = p.read_text().splitlines()
    assert rows[0] == "x0,x1,r,m" and len(rows) == len(s) + 1
    first = [float(v) for v in rows[1].split(",")]
    assert first == [s.centers[0, 0], s.centers[0, 1], s.radii[0], s.marks[0]]
    q = tmp_path / "values.csv"
    write_values_csv(q, [0.5, -1.25])
    assert q.read_text().splitlines() == ["index,value", "0,0.5", "1,-1.25"]
