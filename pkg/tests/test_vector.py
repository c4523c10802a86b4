import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gauge_measure.domain import MeasurableSet
from gauge_measure.errors import NotHKLIntegrable
from gauge_measure.functions import SimpleFunction
from gauge_measure.hk import hk_integrate
from gauge_measure.measures import ScalarMeasure
from gauge_measure.vector import (
    DirectionGrid, VectorMeasure, alexiewicz_norm, apply_functional, dyadic_family, ess_sup, indefinite_integral,
    kl_henstock_integral, pushforward_operator, semivariation, variation, variation_integral, vector_norm,
)

S = MeasurableSet.parse
UNIT = MeasurableSet.interval(0, 1)
TOL = 1e-9


def split_measure():
    return VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1), ScalarMeasure.polynomial([1.0], 1, 2)))


def ramp_measure():
    return VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1), ScalarMeasure.polynomial([0.0, 2.0], 0, 1)))


def circle_measure():
    return VectorMeasure((ScalarMeasure.from_density(np.cos, 0, math.pi),
                          ScalarMeasure.from_density(np.sin, 0, math.pi)))


def test_grids():
    g = DirectionGrid.default(2)
    assert len(g) == 64 and g.is_antipodal
    assert np.allclose(np.linalg.norm(g.directions, axis=1), 1.0)
    h = DirectionGrid.default(2, hemisphere=True)
    assert not h.is_antipodal
    assert DirectionGrid.default(3).dim == 3 and len(DirectionGrid.default(3)) >= 256
    assert DirectionGrid.default(5).dim == 5
    for norm in ("sup", "one"):
        gn = DirectionGrid.default(2, norm)
        assert gn.slack == 1.0
    assert g.slack == pytest.approx(1 / math.cos(math.pi / 64))
    assert set(map(tuple, g.directions)) <= set(map(tuple, g.refined().directions))


def test_apply_functional():
    mu = ramp_measure()
    assert apply_functional(mu, [1, 0]).measure_of(S("[0,0.5]")) == 0.5
    d = apply_functional(mu, np.array([1, 1]) / math.sqrt(2))
    assert d.measure_of(UNIT) == pytest.approx(2 / math.sqrt(2))
    lebs = VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1), ScalarMeasure.polynomial([2.0], 0, 1)))
    assert apply_functional(lebs, np.array([1, 1]) / math.sqrt(2)).density(np.array([0.3]))[0] == pytest.approx(3 / math.sqrt(2))


def test_semivariation_examples():
    mu = split_measure()
    assert abs(semivariation(mu, S("[0,2]")) - math.sqrt(2)) <= 1e-3
    one = VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1),))
    assert semivariation(one, UNIT) == 1.0
    assert semivariation(mu, MeasurableSet.empty()) == 0.0


def test_semivariation_grid_monotone_and_bracketed():
    mu = circle_measure()
    A = MeasurableSet.interval(0.3, 2.5)
    g = DirectionGrid.default(2, size=16)
    lo = semivariation(mu, A, g)
    hi = semivariation(mu, A, g.refined(4))
    assert lo <= hi + 1e-15
    assert hi <= semivariation(mu, A, g, bound="upper") + 1e-12


def test_variation_examples():
    assert variation(split_measure(), S("[0,2]")) == pytest.approx(2.0, abs=1e-12)
    m = ScalarMeasure.polynomial([1.0, 3.0], 0, 1)
    assert variation(VectorMeasure((m,)), S("[0.2,0.9]")) == pytest.approx(m.measure_of(S("[0.2,0.9]")), abs=1e-12)
    assert variation(circle_measure(), MeasurableSet.interval(0, math.pi)) == pytest.approx(math.pi, abs=1e-5)
    assert variation_integral(circle_measure(), MeasurableSet.interval(0, math.pi)) == pytest.approx(math.pi, abs=1e-9)


def test_kl_documented_example():
    r = kl_henstock_integral(lambda t: t, UNIT, ramp_measure(), tol=TOL)
    assert np.allclose(r.x, [0.5, 2 / 3], atol=1e-9)
    assert r.residual <= 1e-8
    zero = kl_henstock_integral(lambda t: np.zeros_like(t), UNIT, ramp_measure(), tol=TOL)
    assert np.all(zero.x == 0) and zero.residual == 0


def test_kl_simple_function_exact():
    mu = VectorMeasure((ScalarMeasure.polynomial([1.0, -1.0], 0, 1, atoms=[(0.5, 0.25)]),
                        ScalarMeasure.polynomial([0.0, 0.0, 3.0], 0, 1)))
    s = SimpleFunction([2.0, -0.5], [S("[0, 0.5]"), S("(0.25, 1]")])
    A = S("[0.1, 0.8]")
    expected = 2.0 * mu.value(S("[0,0.5]") & A) - 0.5 * mu.value(S("(0.25,1]") & A)
    r = kl_henstock_integral(s, A, mu, tol=TOL)
    assert np.allclose(r.x, expected, rtol=1e-14, atol=1e-15)


def test_variation_mode_degenerate_on_antipodal_grid():
    with pytest.raises(NotHKLIntegrable) as info:
        kl_henstock_integral(lambda t: t, UNIT, ramp_measure(), DirectionGrid.default(2), TOL, mode="variation")
    assert info.value.degenerate
    assert "hemisphere" in str(info.value)


def test_variation_mode_on_hemisphere():
    pos = VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1),))
    r = kl_henstock_integral(lambda t: t, UNIT, pos, mode="variation", tol=TOL)
    assert r.x[0] == pytest.approx(0.5, abs=1e-9)


def test_indefinite_integral_additive_and_continuous():
    mu = ramp_measure()
    A, B = S("[0, 0.6]"), S("[0.6, 1]")
    fam = [UNIT, A, S("(0.6, 1]")]
    out = indefinite_integral(np.cos, mu, fam, tol=TOL)
    assert np.max(np.abs(out[UNIT].x - out[A].x - out[fam[2]].x)) <= 3 * TOL
    nested = [MeasurableSet.interval(0, 1 / n) for n in (1, 10, 100, 1000)]
    vals = indefinite_integral(np.cos, mu, nested, tol=TOL)
    norms = [np.linalg.norm(vals[E].x) for E in nested]
    assert all(b < a for a, b in zip(norms, norms[1:])) and norms[-1] < 2e-3
    assert B not in out


def test_alexiewicz_examples():
    leb = VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1),))
    assert alexiewicz_norm(lambda t: np.zeros_like(t), leb) == 0.0
    assert alexiewicz_norm(lambda t: np.ones_like(t), leb) == pytest.approx(1.0, abs=1e-12)
    assert alexiewicz_norm(lambda t: np.sign(t - 0.5), leb) == pytest.approx(0.5, abs=1e-12)


def test_alexiewicz_grid_monotone():
    mu = circle_measure()
    fam = dyadic_family(0, math.pi, 4)
    g = DirectionGrid.default(2, size=8)
    a = alexiewicz_norm(np.cos, mu, g, fam, 1e-8)
    b = alexiewicz_norm(np.cos, mu, g.refined(4), fam, 1e-8)
    assert a <= b + 1e-12


def test_pushforward_examples():
    mu = VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1), ScalarMeasure.polynomial([1.0], 0, 1)))
    same = pushforward_operator(np.eye(2), mu)
    assert np.allclose(same.value(UNIT), mu.value(UNIT))
    row = pushforward_operator([[1.0, 1.0]], mu)
    assert row.dim == 1 and row.components[0].density(np.array([0.4]))[0] == pytest.approx(2.0)
    zero = pushforward_operator(np.zeros((2, 2)), mu)
    assert np.all(zero.value(UNIT) == 0)


def test_ess_sup_examples():
    leb = VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1),))
    assert ess_sup(lambda t: t, UNIT, leb) == pytest.approx(1.0)
    masked = VectorMeasure((ScalarMeasure.piecewise_polynomial([0, 0.4, 0.6, 1], [[1.0], [0.0], [1.0]]),),
                           null_sets=(S("[0.4, 0.6]"),))
    f = lambda t: t + 100.0 * ((t >= 0.4) & (t <= 0.6))  # noqa: E731
    assert ess_sup(f, UNIT, masked) == pytest.approx(1.0)
    assert ess_sup(lambda t: np.full(np.shape(t), -2.5), UNIT, leb) == 2.5


def test_null_sets_validated_and_ignored():
    with pytest.raises(ValueError):
        VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1),), null_sets=(S("[0.2, 0.3]"),))
    mu = VectorMeasure((ScalarMeasure.piecewise_polynomial([0, 0.4, 0.6, 1], [[1.0], [0.0], [2.0]]),
                        ScalarMeasure.piecewise_polynomial([0, 0.4, 0.6, 1], [[0.5], [0.0], [1.0]])),
                       null_sets=(S("[0.4, 0.6]"),))
    f = np.cos
    g = lambda t: np.where((t > 0.4) & (t < 0.6), 1e3, np.cos(t))  # noqa: E731
    a = kl_henstock_integral(f, UNIT, mu, tol=TOL).x
    b = kl_henstock_integral(g, UNIT, mu, tol=TOL).x
    assert np.allclose(a, b, atol=3 * TOL)


def test_simple_function_semivariation_bound_is_nearly_attained():
    mu = circle_measure()
    E = MeasurableSet.interval(0, math.pi)
    grid = DirectionGrid.default(2)
    sv_upper = semivariation(mu, E, grid, bound="upper")
    cells = dyadic_family(0, math.pi, 6)[-64:]
    mids = np.array([c.parts[0].lo + c.parts[0].length / 2 for c in cells])
    rho = np.column_stack([np.cos(mids), np.sin(mids)])
    coarse = DirectionGrid.default(2, size=8)
    best = 0.0
    for x in grid.directions[::4]:
        s = SimpleFunction(np.sign(rho @ x), cells)
        r = kl_henstock_integral(s, E, mu, coarse, 1e-10)
        value = vector_norm(r.x, mu.norm)
        assert value <= sv_upper + 1e-9
        best = max(best, value)
    assert sv_upper - best <= 1e-2


def test_indefinite_semivariation_matches_variation_integrals():
    # the semivariation of E -> integral of f over E against mu, for a density mu,
    # equals max over functionals of the integral of |f| against |x mu|
    mu = ramp_measure()
    f = lambda t: np.cos(4 * t)  # noqa: E731
    nu = VectorMeasure(tuple(ScalarMeasure.from_density(lambda t, c=c: f(t) * c.density(t), 0, 1)
                             for c in mu.components))
    E = S("[0.1, 0.9]")
    grid = DirectionGrid.default(2)
    lhs = semivariation(nu, E, grid)
    rhs = max(hk_integrate(lambda t: np.abs(f(t)), E, apply_functional(mu, x).total_variation(), 1e-10).value
              for x in grid.directions)
    assert abs(lhs - rhs) <= 1e-3


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=10, deadline=None)
def test_kl_linearity(alpha, beta):
    mu = ramp_measure()
    f, g = np.cos, (lambda t: t ** 3)
    x_f = kl_henstock_integral(f, UNIT, mu, tol=TOL).x
    x_g = kl_henstock_integral(g, UNIT, mu, tol=TOL).x
    x_c = kl_henstock_integral(lambda t: alpha * f(t) + beta * g(t), UNIT, mu, tol=TOL).x
    assert np.max(np.abs(x_c - alpha * x_f - beta * x_g)) <= 3 * TOL * max(1.0, abs(alpha) + abs(beta))
