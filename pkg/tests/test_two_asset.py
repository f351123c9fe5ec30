import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from energy_entropy.two_asset import (
    BinaryPath,
    WeightCurve,
    check_reversion,
    concavity_violations,
    constant_curve,
    constant_weight_decomposition,
    discretize_to_grid,
    excess_growth_riemann,
    generating_function,
    logistic_curve,
    market_curve,
    match_factor,
    one_step_factor,
    state_dependent_match_factor,
    tally_matches,
)

EXCURSION_PATH = "uuduudddudddud"


def random_path(rng, m, sigma=0.1, y0=0.0):
    return BinaryPath(y0, rng.choice(np.array([-1, 1], dtype=np.int8), size=m), sigma)


def direct_log_relative_value(path, q_of_y):
    """Replay the path: portfolio value relative to the market, with the market weight on asset 1 = e^y/(1+e^y)."""
    ys = path.values
    log_v = 0.0
    for y, dy in zip(ys[:-1], np.diff(ys)):
        log_v += math.log1p(float(q_of_y(y)) * math.expm1(dy))
    log_s = float(np.logaddexp(ys[-1], 0.0) - np.logaddexp(ys[0], 0.0))
    return log_v - log_s


# one_step_factor / match_factor


def test_one_step_factor_examples():
    assert one_step_factor(0.0, 0.1) == 1.0
    assert one_step_factor(1.0, 0.1) == pytest.approx(math.exp(0.1), rel=1e-15)
    assert one_step_factor(0.5, 0.1) == pytest.approx(1.0525855, abs=5e-8)


def test_match_factor_examples():
    expected = 1 + 0.25 * (math.exp(0.05) - math.exp(-0.05)) ** 2
    assert match_factor(0.5, 0.1) == pytest.approx(expected, rel=1e-15)
    assert match_factor(0.5, 0.1) == pytest.approx(1.0025021, abs=5e-8)
    product = one_step_factor(0.5, 0.1) * one_step_factor(0.5, -0.1)
    assert abs(match_factor(0.5, 0.1) - product) < 1e-14
    assert match_factor(1e-12, 0.1) == pytest.approx(1.0, abs=1e-13)
    assert match_factor(1 - 1e-12, 0.1) == pytest.approx(1.0, abs=1e-13)


@given(st.floats(0.001, 0.999), st.floats(1e-4, 1.0))
def test_match_factor_is_two_step_product_and_peaks_at_half(q, sigma):
    product = one_step_factor(q, sigma) * one_step_factor(q, -sigma)
    assert abs(match_factor(q, sigma) - product) < 1e-14
    assert match_factor(q, sigma) > 1.0
    assert match_factor(q, sigma) <= match_factor(0.5, sigma)


# tallies


def test_reference_excursion_path_tally():
    tally = tally_matches(BinaryPath.from_moves(EXCURSION_PATH))
    assert tally.unmatched_count == 2
    assert tally.N == 6


def test_alternating_and_monotone_tallies():
    t = tally_matches(BinaryPath.from_moves("+-" * 7))
    assert (t.N, t.unmatched_count) == (7, 0)
    t = tally_matches(BinaryPath.from_moves("+" * 9))
    assert (t.N, t.unmatched_count) == (0, 9)
    t = tally_matches(BinaryPath.from_moves(""))
    assert (t.N, t.unmatched_count) == (0, 0)


def test_unmatched_equals_net_displacement(rng):
    for _ in range(10_000):
        path = random_path(rng, int(rng.integers(0, 60)))
        t = tally_matches(path)
        assert t.unmatched_count == abs(path.net_levels)
        assert 2 * t.N + t.unmatched_count == len(path)


def test_tally_csv(tmp_path):
    t = tally_matches(BinaryPath.from_moves(EXCURSION_PATH))
    f = tmp_path / "tally.csv"
    t.to_csv(f)
    rows = list(csv.reader(open(f)))
    assert rows[0] == ["level", "matched_count"]
    assert rows[-2] == ["N", "6"]
    assert rows[-1] == ["unmatched", "2"]
    assert sum(int(r[1]) for r in rows[1:-2]) == 6


def test_binary_path_string_round_trip(rng):
    path = random_path(rng, 37, sigma=0.07, y0=-0.3)
    back = BinaryPath.from_string(path.to_string())
    assert back.y0 == path.y0 and back.sigma == path.sigma
    np.testing.assert_array_equal(back.steps, path.steps)
    with pytest.raises(ValueError):
        BinaryPath(0.0, [1, 2], 0.1)


# constant-weight decomposition


def test_decomposition_matches_direct_product(rng):
    for q in (0.5, 0.2, 0.85):
        for _ in range(20):
            path = random_path(rng, 500, y0=float(rng.normal()))
            m, u, c, total = constant_weight_decomposition(path, q)
            assert abs(total - direct_log_relative_value(path, lambda y: q)) < 1e-10
            assert total == pytest.approx(m + u + c, abs=1e-15)


def test_decomposition_closed_and_monotone_paths():
    closed = BinaryPath.from_moves("++-+--+-")
    m, u, c, total = constant_weight_decomposition(closed, 0.5)
    assert u == 0.0 and c == 0.0
    assert total == pytest.approx(4 * math.log(match_factor(0.5, 0.1)), rel=1e-14)
    assert total > 0
    mono = BinaryPath.from_moves("-----")
    m, u, c, total = constant_weight_decomposition(mono, 0.3)
    assert m == 0.0
    assert total == pytest.approx(direct_log_relative_value(mono, lambda y: 0.3), abs=1e-12)


def test_rearrangement_exact(rng):
    q, sigma = 0.37, 0.05
    for _ in range(50):
        path = random_path(rng, int(rng.integers(1, 300)), sigma=sigma)
        product = np.prod([one_step_factor(q, s * sigma) for s in path.steps])
        t = tally_matches(path)
        net = path.net_levels
        rebuilt = match_factor(q, sigma) ** t.N * one_step_factor(q, math.copysign(sigma, net)) ** abs(net)
        assert rebuilt == pytest.approx(product, rel=1e-12)


# state-dependent weights


def test_state_dependent_match_factor_examples():
    c = constant_curve(0.3)
    assert state_dependent_match_factor(c, 4, 0.1) == pytest.approx(match_factor(0.3, 0.1), rel=1e-14)
    table = {0: 0.6, 1: 0.5}
    curve = WeightCurve(q=lambda y: table[int(round(y / 0.1))], smoothness="finite_variation")
    expected = (1 + 0.6 * math.expm1(0.1)) * (1 + 0.5 * math.expm1(-0.1))
    assert state_dependent_match_factor(curve, 0, 0.1) == pytest.approx(expected, rel=1e-15)
    assert state_dependent_match_factor(curve, 0, 0.1) == pytest.approx(1.0125187590, abs=1e-10)


def test_market_curve_earns_nothing_on_closed_paths(rng):
    q = market_curve()
    for _ in range(200):
        half = random_path(rng, int(rng.integers(1, 100)))
        steps = np.concatenate([half.steps, -half.steps[::-1]])
        closed = BinaryPath(float(rng.normal()), steps, 0.1)
        log_v = sum(math.log1p(float(q(y)) * math.expm1(dy)) for y, dy in zip(closed.values[:-1], np.diff(closed.values)))
        assert abs(math.expm1(log_v)) < 1e-9


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=30), st.floats(1e-3, 0.5))
def test_greedy_rebalancing_premium(values, sigma):
    # nonincreasing q on the grid: every match gains
    qs = sorted(values, reverse=True)
    curve = WeightCurve(q=lambda y: qs[int(round(y / sigma))], smoothness="finite_variation")
    for k in range(len(qs) - 1):
        f = state_dependent_match_factor(curve, k, sigma)
        if 0 < qs[k] < 1 or 0 < qs[k + 1] < 1 or qs[k] != qs[k + 1]:
            assert f > 1.0 or f == pytest.approx(1.0, abs=1e-15)
        assert f >= 1.0 - 1e-15


def test_discrete_inequality_small_sigma(rng):
    sigma = 1e-3
    checked = 0
    for _ in range(400):
        a, b = rng.uniform(-3, 3, 2)
        curve = lambda y, a=a, b=b: 1 / (1 + np.exp(-(a * y + b)))
        k = int(rng.integers(-500, 500))
        y = k * sigma
        q, q1 = float(curve(y)), float(curve(y + sigma))
        dq = q1 - q
        lhs = q * (1 - q)
        rhs = dq / sigma + q * dq
        gain = state_dependent_match_factor(lambda u: float(curve(u)), k, sigma) > 1.0
        if abs(lhs - rhs) > 10 * sigma:
            checked += 1
            assert gain == (lhs >= rhs)
    assert checked > 300


def test_check_reversion_examples():
    assert check_reversion(constant_curve(0.5), -3, 3, 0.01)
    # equality case: the central difference must be fine enough that its error sits below the tolerance
    assert check_reversion(market_curve(), -3, 3, 1e-4)
    assert not check_reversion(logistic_curve(2.0), -3, 3, 0.01)
    q = logistic_curve(2.0)
    assert float(q.derivative(0.0)) == pytest.approx(0.5)


def test_generating_function_values():
    S = generating_function(constant_curve(0.5))
    mu1 = np.linspace(0.05, 0.95, 19)
    np.testing.assert_allclose(S(mu1, 1 - mu1), np.sqrt(mu1 * (1 - mu1)), rtol=1e-13)
    S = generating_function(market_curve())
    np.testing.assert_allclose(S(mu1, 1 - mu1), 0.5, rtol=1e-13)
    with pytest.raises(ValueError):
        S(0.0, 1.0)


def test_generating_function_by_quadrature():
    c = constant_curve(0.3)
    plain = WeightCurve(q=c.q)
    ys = np.array([-1.0, 0.4, 2.0])
    np.testing.assert_allclose(plain.F(ys), 0.3 * ys, atol=1e-12)


def test_concavity_matches_reversion():
    for curve in (constant_curve(0.5), constant_curve(0.2), market_curve(), logistic_curve(0.5)):
        assert check_reversion(curve, -4.6, 4.6, 1e-4)
        assert concavity_violations(curve).size == 0
    for slope in (1.5, 2.0, 3.0):
        curve = logistic_curve(slope)
        assert not check_reversion(curve, -4.6, 4.6, 0.01)
        assert concavity_violations(curve).size > 0


# discretization


def test_discretize_examples():
    p = discretize_to_grid([0.0, 0.1, 0.2, 0.3], 0.1)
    np.testing.assert_array_equal(p.steps, [1, 1, 1])
    p = discretize_to_grid([0.0, 0.04, -0.04, 0.049, -0.03], 0.1)
    assert len(p) == 0
    # piecewise-linear 0 -> 0.25 -> -0.05 sampled finely; the crossing rule gives two downs
    series = np.concatenate([np.linspace(0, 0.25, 26), np.linspace(0.25, -0.05, 31)[1:]])
    p = discretize_to_grid(series, 0.1)
    np.testing.assert_array_equal(p.steps, [1, 1, -1, -1])
    with pytest.raises(ValueError):
        discretize_to_grid([], 0.1)


def test_discretize_multi_level_jump():
    p = discretize_to_grid([1.0, 1.35, 0.8], 0.1)
    np.testing.assert_array_equal(p.steps, [1, 1, 1, -1, -1, -1, -1, -1])
    assert p.y0 == 1.0


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=50), st.floats(0.01, 0.5))
def test_discretized_path_stays_within_one_level(series, sigma):
    p = discretize_to_grid(series, sigma)
    final = p.values[-1]
    assert abs(final - series[-1]) < sigma + 1e-9


# excess growth


def test_excess_growth_examples():
    y = 0.1 * np.array([0, 1, 0, -1, 0, 1])
    assert excess_growth_riemann(np.full(6, 0.3), y) == pytest.approx(0.5 * 0.21 * 5 * 0.01)
    assert excess_growth_riemann(np.zeros(6), y) == 0.0
    with pytest.raises(ValueError):
        excess_growth_riemann([0.5], y)


def test_excess_growth_vs_match_factors(rng):
    sigma = 1e-3
    for q in (0.5, 0.3):
        half = random_path(rng, 2000, sigma=sigma)
        closed = BinaryPath(0.0, np.concatenate([half.steps, -half.steps[::-1]]), sigma)
        t = tally_matches(closed)
        log_matches = sum(
            c * math.log(state_dependent_match_factor(constant_curve(q), k, sigma)) for k, c in t.matched_per_level.items()
        )
        riemann = excess_growth_riemann(np.full(len(closed), q), closed.values)
        assert log_matches == pytest.approx(riemann, rel=0.01)
    # a state-dependent reversion curve
    q = logistic_curve(0.5)
    half = random_path(rng, 2000, sigma=sigma)
    closed = BinaryPath(0.0, np.concatenate([half.steps, -half.steps[::-1]]), sigma)
    log_v = direct_log_relative_value(closed, q)
    ys = closed.values
    riemann = excess_growth_riemann(q(ys), ys)
    # on a closed path the value is 1/2 sum (q(1-q) - q') dY^2
    slope_term = 0.5 * float(np.sum(q.derivative(ys[:-1]) * np.diff(ys) ** 2))
    assert log_v == pytest.approx(riemann - slope_term, rel=0.01)


def test_sigma_squared_composition(rng):
    s1, s2, rho = 0.2, 0.3, 0.6
    cov = [[s1 * s1, rho * s1 * s2], [rho * s1 * s2, s2 * s2]]
    inc = rng.multivariate_normal([0, 0], cov, size=100_000)
    dy = inc[:, 0] - inc[:, 1]
    assert dy.var() == pytest.approx(s1**2 + s2**2 - 2 * rho * s1 * s2, rel=0.02)
