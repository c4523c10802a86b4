import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gauge_measure.convex import Ball, Box, from_generator, hausdorff, minkowski_sum, norm_of_set, scale
from gauge_measure.domain import MeasurableSet
from gauge_measure.errors import NotConvexlyIntegrable
from gauge_measure.functions import PiecewisePolynomial, SimpleFunction
from gauge_measure.measures import ScalarMeasure
from gauge_measure.setvalued import (
    BallDensity, BoxDensity, SetValuedMeasure, ZonotopeDensity, rn_equality_check, selection, sv_indefinite,
    sv_kl_henstock_integral, sv_measure_of, sv_measure_of_many, sv_variation, sv_variation_integral,
)
from gauge_measure.vector import DirectionGrid, kl_henstock_integral

from oracles import product_integral, random_nonnegative_piecewise

S = MeasurableSet.parse
UNIT = MeasurableSet.interval(0, 1)
LEB = ScalarMeasure.polynomial([1.0], 0, 1)
TOL = 1e-9
GRID = DirectionGrid.default(2)


def unit_ball():
    return SetValuedMeasure(BallDensity([0.0, 0.0], 1.0), LEB)


def square():
    return SetValuedMeasure(BoxDensity([0.0, 0.0], [1.0, 1.0]), LEB)


def t(x):
    return np.asarray(x, dtype=float)


t.breakpoints = []


def test_empty_set_is_origin():
    W = sv_measure_of(unit_ball(), MeasurableSet.empty(), GRID)
    assert np.all(W.values == 0.0)


def test_unit_ball_over_unit_interval():
    W = sv_measure_of(unit_ball(), UNIT, GRID)
    assert hausdorff(W, from_generator(Ball([0, 0], 1.0), GRID)) < 1e-12
    assert isinstance(W.generator, Ball) and W.generator.radius == pytest.approx(1.0, abs=1e-12)


def test_singleton_path():
    M = SetValuedMeasure(BoxDensity([t, 0.0], [0.0, 0.0]), LEB)
    W = sv_measure_of(M, UNIT, GRID)
    assert hausdorff(W, from_generator(Box.point([0.5, 0.0]), GRID)) < 1e-12


def test_indicator_reproduces_measure():
    M = SetValuedMeasure(BoxDensity([t, 0.0], [1.0, t]), LEB)
    chi = SimpleFunction([1.0], [UNIT])
    W = sv_kl_henstock_integral(chi, UNIT, M, GRID, TOL)
    assert hausdorff(W, sv_measure_of(M, UNIT, GRID)) < 1e-14


def test_simple_function_is_minkowski_combination():
    M = SetValuedMeasure(BoxDensity([t, 0.0], [1.0, t]), LEB)
    A = S("[0.1, 0.9]")
    sets = [S("[0, 0.5)"), S("[0.25, 0.75]"), S("(0.6, 1]")]
    lam = [2.0, 0.5, 3.0]
    W = sv_kl_henstock_integral(SimpleFunction(lam, sets), A, M, GRID, TOL)
    expect = None
    for c, B in zip(lam, sets):
        term = scale(c, sv_measure_of(M, B & A, GRID))
        expect = term if expect is None else minkowski_sum(expect, term)
    assert hausdorff(W, expect) < 1e-14


def test_ramp_times_ball():
    W = sv_kl_henstock_integral(t, UNIT, unit_ball(), GRID, TOL)
    assert hausdorff(W, from_generator(Ball([0, 0], 0.5), GRID)) < 3 * TOL


def test_sign_changing_integrand_has_no_set():
    def f(x):
        return np.asarray(x, dtype=float) - 0.7

    with pytest.raises(NotConvexlyIntegrable) as exc:
        sv_kl_henstock_integral(f, UNIT, unit_ball(), GRID, TOL)
    assert exc.value.args[0]


def test_zero_integrand_gives_origin():
    def f(x):
        return np.zeros(np.shape(x))

    W = sv_kl_henstock_integral(f, UNIT, square(), GRID, TOL)
    assert np.all(W.values == 0.0)


def test_selection_examples():
    c1 = PiecewisePolynomial([0, 1], [[0.0, 1.0]])
    M = SetValuedMeasure(BallDensity([c1, 2.0], t), LEB)
    s = selection(M, "steiner")
    assert s.value(UNIT) == pytest.approx([0.5, 2.0], abs=1e-12)

    box = SetValuedMeasure(BoxDensity([0.5, 0.5], [0.5, 0.5]), LEB)
    e = selection(box, "extremal", [1.0, 0.0])
    assert e.value(UNIT) == pytest.approx([1.0, 0.5], abs=1e-12)

    path = SetValuedMeasure(BoxDensity([t, 1.0], [0.0, 0.0]), LEB)
    for rule, u in (("steiner", None), ("extremal", [0.3, -1.0])):
        v = selection(path, rule, u).value(UNIT)
        assert v == pytest.approx([0.5, 1.0], abs=1e-12)

    with pytest.raises(ValueError):
        selection(M, "extremal")
    with pytest.raises(ValueError):
        selection(M, "nearest")


@pytest.mark.parametrize("make", [
    lambda: SetValuedMeasure(BoxDensity([t, 0.0], [1.0, t]), LEB),
    lambda: SetValuedMeasure(BallDensity([0.5, t], t), LEB),
    lambda: SetValuedMeasure(ZonotopeDensity([0.0, t], [[1.0, 0.0], [1.0, 1.0]], [t, 0.5]), LEB),
])
def test_selections_lie_in_values(make):
    M = make()
    sets = [S("[0, 0.3]"), S("[0.2, 0.9]"), S("[0, 0.1] u [0.5, 1]"), UNIT]
    rules = [("steiner", None), ("extremal", [1.0, 0.0]), ("extremal", [-0.6, 0.8])]
    values = sv_measure_of_many(M, sets, GRID)
    for rule, u in rules:
        s = selection(M, rule, u)
        for A, W in zip(sets, values):
            assert W.contains(s.value(A), 1e-8)


def test_selection_integral_lies_in_set_integral():
    M = SetValuedMeasure(BoxDensity([t, 0.0], [1.0, t]), LEB)
    f = PiecewisePolynomial([0, 0.4, 1], [[1.0, 2.0], [0.5]])
    W = sv_kl_henstock_integral(f, UNIT, M, GRID, TOL)
    for rule, u in (("steiner", None), ("extremal", [1.0, 1.0]), ("extremal", [0.0, -1.0])):
        x = kl_henstock_integral(f, UNIT, selection(M, rule, u), tol=TOL).x
        assert W.contains(x, 1e-6)


def test_variation_examples():
    assert sv_variation(unit_ball(), UNIT, depth=4) == pytest.approx(1.0, abs=1e-9)
    zero = SetValuedMeasure(BoxDensity([0.0, 0.0], [0.0, 0.0]), LEB)
    assert sv_variation(zero, UNIT, depth=4) == 0.0
    assert sv_variation(square(), UNIT, depth=3, grid=DirectionGrid.default(2, size=256)) == pytest.approx(
        math.sqrt(2), abs=1e-3)
    assert sv_variation_integral(square(), UNIT) == pytest.approx(math.sqrt(2), abs=1e-12)
    with pytest.raises(ValueError):
        sv_variation(square(), UNIT, depth=-1)


def test_variation_approaches_density_integral():
    # the center moves, so coarse partitions cancel and refinement raises the sum
    M = SetValuedMeasure(BallDensity([PiecewisePolynomial([0, 1], [[-1.0, 2.0]]), 0.0], 0.1), LEB)
    target = sv_variation_integral(M, UNIT)
    assert target == pytest.approx(0.5 + 0.1, abs=1e-12)
    vals = [sv_variation(M, UNIT, depth=k) for k in range(0, 7)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[0] < target - 0.1
    assert vals[-1] == pytest.approx(target, abs=1e-3)


def test_rn_examples():
    one = SimpleFunction([1.0], [UNIT])
    assert rn_equality_check(one, unit_ball(), UNIT, GRID, TOL) <= 2 * TOL
    assert rn_equality_check(t, unit_ball(), UNIT, GRID, TOL) <= 3 * TOL


def test_rn_against_closed_form(rng):
    for _ in range(5):
        fb, fc = random_nonnegative_piecewise(rng)
        cb, cc = random_nonnegative_piecewise(rng)
        rb, rc = random_nonnegative_piecewise(rng)
        f, c, r = PiecewisePolynomial(fb, fc), PiecewisePolynomial(cb, cc), PiecewisePolynomial(rb, rc)
        M = SetValuedMeasure(BoxDensity([c, 0.0], [r, r]), LEB)
        assert rn_equality_check(f, M, UNIT, GRID, TOL) <= 3 * TOL
        W = sv_kl_henstock_integral(f, UNIT, M, GRID, TOL)
        fc_int = product_integral(fb, fc, cb, cc, 0, 1)
        fr_int = product_integral(fb, fc, rb, rc, 0, 1)
        U = GRID.directions
        expect = U[:, 0] * fc_int + np.abs(U).sum(axis=1) * fr_int
        assert np.max(np.abs(W.values - expect)) <= 3 * TOL


def test_nonnegativity_required():
    def f(x):
        return np.asarray(x, dtype=float) - 0.5

    with pytest.raises(ValueError):
        rn_equality_check(f, unit_ball(), UNIT, GRID, TOL)
    with pytest.raises(ValueError):
        sv_indefinite(f, unit_ball(), [UNIT], GRID, TOL)
    with pytest.raises(ValueError):
        SetValuedMeasure(BallDensity([0.0, 0.0], PiecewisePolynomial([0, 1], [[-0.5, 1.0]])), LEB)


def test_indefinite_examples():
    M = SetValuedMeasure(BoxDensity([t, 0.0], [1.0, t]), LEB)
    A, B = S("[0, 0.4]"), S("(0.4, 0.75]")
    out = sv_indefinite(t, M, [MeasurableSet.empty(), A, B, A | B], GRID, TOL)
    assert np.all(out[MeasurableSet.empty()].values == 0.0)
    assert hausdorff(out[A | B], minkowski_sum(out[A], out[B])) <= 3 * TOL
    norms = [norm_of_set(sv_indefinite(t, M, [S(f"[0, {1 / n}]")], GRID, TOL)[S(f"[0, {1 / n}]")])
             for n in (1, 10, 100, 1000)]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-3


def test_sigma_additivity_per_direction():
    M = SetValuedMeasure(BallDensity([PiecewisePolynomial([0, 1], [[1.0, -2.0]]), t], t), LEB)
    cells = [MeasurableSet.interval(1 - 2.0 ** -k, 1 - 2.0 ** -(k + 1), closed_hi=False) for k in range(12)]
    union = S(f"[0, {1 - 2.0 ** -12})")
    vals = sv_measure_of_many(M, cells + [union], GRID, TOL)
    total = np.sum([v.values for v in vals[:-1]], axis=0)
    assert np.max(np.abs(total - vals[-1].values)) <= 3 * TOL


def test_linearity_and_scaling():
    M = SetValuedMeasure(ZonotopeDensity([0.0, t], [[1.0, 0.0], [1.0, 1.0]], [t, 0.5]), LEB)
    f = PiecewisePolynomial([0, 0.3, 1], [[0.2, 1.0], [1.0, 0.0, 1.0]])
    g = PiecewisePolynomial([0, 0.6, 1], [[1.0], [0.0, 2.0]])

    def fg(x):
        return f(x) + g(x)

    fg.breakpoints = sorted(set(f.breakpoints) | set(g.breakpoints))
    Wf = sv_kl_henstock_integral(f, UNIT, M, GRID, TOL)
    Wg = sv_kl_henstock_integral(g, UNIT, M, GRID, TOL)
    Wfg = sv_kl_henstock_integral(fg, UNIT, M, GRID, TOL)
    assert hausdorff(Wfg, minkowski_sum(Wf, Wg)) <= 3 * TOL

    def three_f(x):
        return 3.0 * f(x)

    three_f.breakpoints = f.breakpoints
    W3 = sv_kl_henstock_integral(three_f, UNIT, M, GRID, TOL)
    assert hausdorff(W3, scale(3.0, Wf)) <= 3 * TOL


def test_norm_bounded_by_variation_integral():
    M = SetValuedMeasure(BoxDensity([t, 0.0], [1.0, t]), LEB)
    f = PiecewisePolynomial([0, 0.5, 1], [[0.0, 2.0], [1.0]])
    W = sv_kl_henstock_integral(f, UNIT, M, GRID, TOL)
    assert norm_of_set(W) <= sv_variation_integral(M, UNIT, f=f) + 1e-6


def test_grid_must_match_measure():
    with pytest.raises(ValueError):
        sv_measure_of(unit_ball(), UNIT, DirectionGrid.default(3))
    with pytest.raises(ValueError):
        sv_measure_of(unit_ball(), UNIT, DirectionGrid.default(2, "sup"))


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.0, 2.0), b=st.floats(0.0, 2.0), split=st.floats(0.05, 0.95))
def test_support_values_add_over_splits(a, b, split):
    M = SetValuedMeasure(BoxDensity([a, 0.0], [b, t]), LEB)
    L, R = MeasurableSet.interval(0, split, closed_hi=False), MeasurableSet.interval(split, 1)
    WL, WR, W = sv_measure_of_many(M, [L, R, UNIT], GRID)
    assert hausdorff(W, minkowski_sum(WL, WR)) <= 3 * TOL
