import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from energy_entropy.two_asset import WeightCurve, constant_curve, logistic_curve
from energy_entropy.variational import (
    ConstraintSet,
    WeightFunction,
    growth_rate_weight,
    lambda_by_parts,
    lambda_functional,
    optimal_q,
    optimization_report,
    write_report,
)
from oracles import grid_search_optimum, ou_sup_closed_form

HALF = constant_curve(0.5)


def pl_curve(knots, values):
    """Piecewise-linear continuous curve with its derivative and kinks declared."""
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    slopes = np.diff(values) / np.diff(knots)

    def q(y):
        return np.interp(y, knots, values)

    def dq(y):
        idx = np.clip(np.searchsorted(knots, y, side="right") - 1, 0, slopes.size - 1)
        inside = (np.asarray(y) >= knots[0]) & (np.asarray(y) < knots[-1])
        return np.where(inside, slopes[idx], 0.0)

    return WeightCurve(q=q, smoothness="finite_variation", derivative=dq, breakpoints=tuple(knots))


def random_admissible(rng, constraints=None, n=13, span=3.0):
    knots = np.linspace(-span, span, n)
    values = rng.uniform(0, 1, n)
    values[n // 2] = 0.5
    if constraints is not None:
        values = np.clip(values, constraints.lower(knots), constraints.upper(knots))
    return pl_curve(knots, values)


@pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_equal_weight_bang_bang(gamma):
    assert lambda_functional(HALF, WeightFunction.bang_bang(gamma)) == pytest.approx(1 / (2 * gamma), abs=1e-9)


def test_equal_weight_bang_bang_example():
    assert lambda_functional(HALF, WeightFunction.bang_bang(0.5)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 3.0])
def test_equal_weight_ou(gamma):
    # the Stieltjes part vanishes for constant q, leaving int w / 4
    expected = math.sqrt(math.pi) / (4 * math.sqrt(gamma))
    assert lambda_functional(HALF, WeightFunction.ou(gamma)) == pytest.approx(expected, abs=1e-9)


def test_zero_curve_gives_zero():
    zero = constant_curve(0.0)
    for w in (WeightFunction.bang_bang(1.0), WeightFunction.ou(0.7)):
        assert lambda_functional(zero, w) == 0.0


@pytest.mark.parametrize("slope", [0.3, 1.0, 2.5])
@pytest.mark.parametrize("w", [WeightFunction.ou(1.0), WeightFunction.ou(0.3), WeightFunction.bang_bang(1.5)])
def test_by_parts_equivalence(slope, w):
    q = logistic_curve(-slope)
    assert abs(lambda_functional(q, w) - lambda_by_parts(q, w)) < 1e-6


def test_stieltjes_sum_without_derivative():
    q = logistic_curve(-1.0)
    bare = WeightCurve(q=q.q, smoothness="finite_variation")
    w = WeightFunction.ou(1.0)
    assert lambda_functional(bare, w) == pytest.approx(lambda_by_parts(q, w), abs=1e-6)


def test_general_weight_matches_ou():
    g = WeightFunction.general(lambda y: -np.asarray(y) ** 2, lambda y: -2 * np.asarray(y))
    o = WeightFunction.ou(1.0)
    q = logistic_curve(-0.7)
    assert lambda_functional(q, g) == pytest.approx(lambda_functional(q, o), abs=1e-9)
    assert optimal_q(g).value == pytest.approx(optimal_q(o).value, abs=1e-8)


def test_weight_function_validation():
    with pytest.raises(ValueError):
        WeightFunction.bang_bang(0.0)
    with pytest.raises(ValueError):
        WeightFunction.ou(-1.0)
    with pytest.raises(ValueError):
        WeightFunction.tabulated([0, 1], [1, 1])
    heavy = WeightFunction.general(lambda y: -0.5 * np.log1p(np.asarray(y) ** 2), lambda y: -np.asarray(y) / (1 + np.asarray(y) ** 2))
    with pytest.raises(ValueError):
        heavy.bounds()


@pytest.mark.parametrize("gamma", [0.5, 0.9, 2.0, 5.0])
def test_bang_bang_supremum(gamma):
    # correct supremum (1 + gamma^2) / (2 gamma) for gamma < 1, and 1 otherwise
    sup = (1 + gamma * gamma) / (2 * gamma) if gamma < 1 else 1.0
    opt = optimal_q(WeightFunction.bang_bang(gamma), eta=1e-4)
    assert opt.interpolated
    assert sup - opt.gap_bound - 1e-8 <= opt.value <= sup + 1e-8


def test_bang_bang_optimal_curve_shape():
    gamma = 0.5
    opt = optimal_q(WeightFunction.bang_bang(gamma))
    ys = np.array([-2.0, -0.5, 0.5, 2.0])
    np.testing.assert_allclose(opt.curve(ys), [0.75, 0.75, 0.25, 0.25])
    assert float(opt.curve(0.0)) == 0.5
    opt = optimal_q(WeightFunction.bang_bang(2.0))
    np.testing.assert_allclose(opt.curve(ys), [1.0, 1.0, 0.0, 0.0])


@pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0, 3.0])
def test_ou_optimum_closed_form_and_oracle(gamma):
    w = WeightFunction.ou(gamma)
    opt = optimal_q(w)
    assert not opt.interpolated
    assert opt.value == pytest.approx(ou_sup_closed_form(gamma), abs=1e-8)
    oracle, _, _ = grid_search_optimum(w)
    assert opt.value == pytest.approx(oracle, rel=5e-3)
    assert opt.value >= oracle - 1e-9
    assert opt.value > lambda_functional(HALF, w)


def test_ou_optimal_curve_breakpoints():
    gamma = 1.0
    q = optimal_q(WeightFunction.ou(gamma)).curve
    r = 1 / (2 * gamma)
    np.testing.assert_allclose(q(np.array([-1.0, -r, 0.0, 0.25, r, 1.0])), [1.0, 1.0, 0.5, 0.25, 0.0, 0.0], atol=1e-15)


@pytest.mark.parametrize(
    "w", [WeightFunction.ou(1.0), WeightFunction.ou(0.4), WeightFunction.bang_bang(0.6), WeightFunction.bang_bang(1.7)]
)
def test_dominance_over_random_curves(rng, w):
    opt = optimal_q(w)
    for _ in range(100):
        q = random_admissible(rng)
        assert opt.value + opt.gap_bound >= lambda_by_parts(q, w) - 1e-9


def test_dominance_with_constraints(rng):
    cons = ConstraintSet(q_floor=0.2, ratio_bounds=(0.5, 1.8))
    w = WeightFunction.ou(0.8)
    opt = optimal_q(w, cons)
    ys = np.linspace(-5, 5, 1001)
    q = opt.curve(ys)
    assert np.all(q >= cons.lower(ys) - 1e-15) and np.all(q <= cons.upper(ys) + 1e-15)
    for _ in range(100):
        curve = random_admissible(rng, cons)
        assert opt.value >= lambda_by_parts(curve, w) - 1e-9


def test_constraint_activation():
    opt = optimal_q(WeightFunction.bang_bang(0.8), ConstraintSet(q_floor=0.3))
    ys = np.linspace(0.01, 5, 50)
    np.testing.assert_allclose(opt.curve(ys), 0.3)
    np.testing.assert_allclose(opt.curve(-ys), 0.7)


def test_constraint_set_validation():
    with pytest.raises(ValueError):
        ConstraintSet(q_floor=0.6)
    with pytest.raises(ValueError):
        ConstraintSet(ratio_bounds=(1.2, 2.0))
    cons = ConstraintSet(ratio_bounds=(0.5, 1.5))
    assert float(cons.lower(0.0)) <= 0.5 <= float(cons.upper(0.0))


@given(st.floats(0.01, 0.99), st.floats(1.01, 5.0), st.floats(-6, 6))
def test_ratio_box_is_consistent(A, B, y):
    cons = ConstraintSet(ratio_bounds=(A, B))
    assert float(cons.lower(y)) <= float(cons.upper(y)) + 1e-15


def test_growth_rate_weight():
    assert growth_rate_weight(0.0, 0.3) == 0.5
    b = 0.2
    assert growth_rate_weight(b * b / 2, b) == pytest.approx(1.0)
    assert growth_rate_weight(-0.01, 0.2) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        growth_rate_weight(0.1, 0.0)


def test_tabulated_weight():
    ys = np.linspace(-8, 8, 801)
    w = WeightFunction.tabulated(ys, np.exp(-np.abs(ys)))
    assert lambda_functional(HALF, w) == pytest.approx(0.5, abs=1e-3)
    assert optimal_q(w).value == pytest.approx(1.0, abs=2e-3)
    zero = WeightFunction.tabulated(ys, np.zeros_like(ys))
    assert lambda_functional(HALF, zero) == 0.0


def test_report(tmp_path):
    report = optimization_report(WeightFunction.ou(1.0), ConstraintSet(q_floor=0.1))
    assert set(report) == {"w_kind", "gamma", "constraints", "lambda_eq_weight", "lambda_optimal", "q_samples"}
    f = tmp_path / "r.json"
    write_report(report, f)
    back = json.loads(f.read_text())
    assert back["lambda_optimal"] == report["lambda_optimal"]
    assert back["constraints"]["q_floor"] == 0.1
