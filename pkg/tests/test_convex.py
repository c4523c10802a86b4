import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gauge_measure.convex import (
    Ball, Box, SupportSet, Zonotope, from_generator, hausdorff, minkowski_sum, norm_of_set, scale,
    validate_convexity, zero_set,
)
from gauge_measure.errors import GridMismatch, NegativeScalar
from gauge_measure.vector import DirectionGrid

G2 = DirectionGrid.default(2)
G3 = DirectionGrid.default(3)


def box(lo, hi, grid=G2):
    return from_generator(Box.from_bounds(lo, hi), grid)


def test_from_generator_examples():
    assert np.allclose(from_generator(Ball([0, 0], 1.0), G2).values, 1.0)
    b = box([0, 0], [1, 1])
    i = int(np.argmin(np.linalg.norm(G2.directions - [1, 0], axis=1)))
    assert b.values[i] == 1.0
    p = np.array([0.3, -2.0])
    assert np.allclose(from_generator(Box.point(p), G2).values, G2.directions @ p)


def test_generators_match_vertex_maxima(rng):
    z = Zonotope(rng.normal(size=3), rng.normal(size=(4, 3)))
    verts = z.center + np.array([[a, b, c, d] for a in (-1, 1) for b in (-1, 1) for c in (-1, 1) for d in (-1, 1)]) @ z.generators
    assert np.allclose(from_generator(z, G3).values, np.max(G3.directions @ verts.T, axis=1), atol=1e-12)
    bx = Box(rng.normal(size=3), rng.uniform(0, 1, 3))
    corners = bx.center + np.array([[a, b, c] for a in (-1, 1) for b in (-1, 1) for c in (-1, 1)]) * bx.radii
    assert np.allclose(from_generator(bx, G3).values, np.max(G3.directions @ corners.T, axis=1), atol=1e-12)


def test_minkowski_and_scale_examples():
    ball = from_generator(Ball([0, 0], 1.0), G2)
    two = minkowski_sum(ball, ball)
    assert np.allclose(two.values, from_generator(Ball([0, 0], 2.0), G2).values)
    assert isinstance(two.generator, Ball) and two.generator.radius == 2.0
    assert np.array_equal(minkowski_sum(ball, zero_set(G2)).values, ball.values)
    s = box([0, 0], [1, 1]) + box([1, -1], [2, 0])
    assert np.allclose(s.values, box([1, -1], [3, 1]).values)
    assert np.all(scale(0.0, ball).values == 0)
    assert np.allclose(scale(2.0, ball).values, 2.0)
    assert np.allclose(scale(0.5, box([0, 0], [2, 2])).values, box([0, 0], [1, 1]).values)
    with pytest.raises(NegativeScalar):
        scale(-1.0, ball)


def test_hausdorff_examples():
    ball = from_generator(Ball([0, 0], 1.0), G2)
    assert hausdorff(ball, ball) == 0.0
    assert abs(hausdorff(box([0, 0], [1, 1]), box([0, 0], [2, 2])) - math.sqrt(2)) <= 1e-3
    assert hausdorff(ball, from_generator(Ball([0, 0], 2.0), G2)) == pytest.approx(1.0)
    with pytest.raises(GridMismatch):
        hausdorff(ball, from_generator(Ball([0, 0], 1.0), DirectionGrid.default(2, size=32)))


def test_hausdorff_monotone_under_refinement():
    A = (Box.from_bounds([0, 0], [1, 1]), Box.from_bounds([0.2, -0.4], [2.3, 1.7]))
    g = DirectionGrid.default(2, size=16)
    coarse = hausdorff(from_generator(A[0], g), from_generator(A[1], g))
    fine = hausdorff(from_generator(A[0], g.refined(4)), from_generator(A[1], g.refined(4)))
    assert coarse <= fine + 1e-15


def test_norm_of_set_examples():
    assert norm_of_set(zero_set(G2)) == 0.0
    assert norm_of_set(from_generator(Ball([0, 0], 3.0), G2)) == pytest.approx(3.0)
    assert abs(norm_of_set(box([1, 1], [2, 2])) - 2 * math.sqrt(2)) <= 1e-3


def test_validate_convexity_examples(rng):
    for g in (Ball([0.1, 0.2], 1.0), Box([0, 1], [2, 0.5]), Zonotope([0, 0], rng.normal(size=(3, 2)))):
        assert validate_convexity(from_generator(g, G2).values, G2)[0]
    vals = from_generator(Ball([0, 0], 1.0), G2).values.copy()
    vals[5] -= 1.0
    ok, worst = validate_convexity(vals, G2)
    assert not ok and worst > 0.4
    assert validate_convexity(np.zeros(len(G2)), G2) == (True, 0.0)
    assert not validate_convexity(-from_generator(Ball([0, 0], 1.0), G2).values, G2)[0]
    z3 = from_generator(Zonotope([0, 0, 0], rng.normal(size=(4, 3))), G3).values
    assert validate_convexity(z3, G3)[0]
    bumped = z3.copy()
    bumped[17] += 0.5
    assert not validate_convexity(bumped, G3)[0]


def test_contains():
    b = box([0, 0], [1, 1])
    assert b.contains([0.5, 0.5]) and b.contains([1, 1])
    assert not b.contains([1.1, 0.5])


coords = st.floats(-5, 5)
boxes = st.tuples(coords, coords, st.floats(0, 3), st.floats(0, 3)).map(lambda v: Box([v[0], v[1]], [v[2], v[3]]))
balls = st.tuples(coords, coords, st.floats(0, 3)).map(lambda v: Ball([v[0], v[1]], v[2]))
shapes = st.one_of(boxes, balls)


@given(shapes, shapes, shapes)
@settings(max_examples=200, deadline=None)
def test_hausdorff_pseudometric(a, b, c):
    A, B, C = (from_generator(x, G2) for x in (a, b, c))
    assert hausdorff(A, B) == hausdorff(B, A)
    assert hausdorff(A, A) == 0.0
    assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12


@given(shapes, shapes, st.floats(0, 4))
@settings(max_examples=100, deadline=None)
def test_support_identities(a, b, lam):
    A, B = from_generator(a, G2), from_generator(b, G2)
    assert np.array_equal(minkowski_sum(A, B).values, A.values + B.values)
    assert np.array_equal(scale(lam, A).values, lam * A.values)
    s = minkowski_sum(A, B)
    assert validate_convexity(s.values, G2)[0]


def test_support_set_rejects_wrong_length():
    with pytest.raises(ValueError):
        SupportSet(G2, np.zeros(3))
