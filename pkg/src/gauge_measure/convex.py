"""Compact convex sets in R^d stored as support values on a direction grid.

A set A is kept as h(u) = sup_{x in A} u . x for every grid functional u.
Minkowski sums and nonnegative scalings act pointwise on h, and the
Hausdorff distance of two convex sets is the largest gap between their
support values (a lower bound on a finite grid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .errors import GridMismatch, NegativeScalar
from .vector import DirectionGrid, dual_norm, vector_norm


@dataclass(frozen=True)
class Box:
    """Axis-aligned box center +- radii."""

    center: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if c.shape != r.shape:
            raise ValueError("center and radii must have the same length")
        if np.any(r < 0):
            raise ValueError("radii must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radii", r)

    @classmethod
    def from_bounds(cls, lo, hi) -> "Box":
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        return cls((lo + hi) / 2, (hi - lo) / 2)

    @classmethod
    def point(cls, p) -> "Box":
        p = np.asarray(p, dtype=float)
        return cls(p, np.zeros_like(p))

    def support(self, u: np.ndarray) -> np.ndarray:
        return u @ self.center + np.abs(u) @ self.radii

    def argmax(self, u) -> np.ndarray:
        return self.center + np.sign(u) * self.radii

    def farthest_norm(self, norm: str = "euclidean") -> float:
        # a convex function peaks at a vertex; |c_i| + r_i picks the best sign per axis
        return float(vector_norm(np.abs(self.center) + self.radii, norm))


@dataclass(frozen=True)
class Ball:
    """Closed ball center + radius * (unit ball of ``norm``)."""

    center: np.ndarray
    radius: float
    norm: str = "euclidean"

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "radius", float(self.radius))

    def support(self, u: np.ndarray) -> np.ndarray:
        return u @ self.center + self.radius * dual_norm(u, self.norm)

    def argmax(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.center + self.radius * _unit_argmax(u, self.norm)

    def farthest_norm(self, norm: str | None = None) -> float:
        if norm not in (None, self.norm):
            raise ValueError("ball radius is measured in its own norm")
        return float(vector_norm(self.center, self.norm)) + self.radius


def _unit_argmax(u: np.ndarray, norm: str) -> np.ndarray:
    """A point of the unit ball of ``norm`` maximizing u . x."""
    if norm == "euclidean":
        n = np.linalg.norm(u)
        return u / n if n > 0 else np.zeros_like(u)
    if norm == "sup":
        return np.sign(u)
    out = np.zeros_like(u)
    if np.any(u):
        k = int(np.argmax(np.abs(u)))
        out[k] = np.sign(u[k])
    return out


@dataclass(frozen=True)
class Zonotope:
    """center + sum_j [-1, 1] * generators[j]."""

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        g = np.asarray(self.generators, dtype=float).reshape(-1, c.size)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", g)

    def support(self, u: np.ndarray) -> np.ndarray:
        return u @ self.center + np.abs(u @ self.generators.T).sum(axis=-1)

    def argmax(self, u) -> np.ndarray:
        return self.center + np.sign(self.generators @ u) @ self.generators

    def farthest_norm(self, norm: str = "euclidean") -> float:
        k = self.generators.shape[0]
        if k == 0:
            return float(vector_norm(self.center, norm))
        if k > 20:
            raise ValueError("vertex enumeration limited to 20 generators")
        signs = np.array(list(product((-1.0, 1.0), repeat=k)))
        return float(vector_norm(self.center + signs @ self.generators, norm).max())


@dataclass(frozen=True)
class SupportSet:
    """Support values of a compact convex set on a direction grid."""

    grid: DirectionGrid
    values: np.ndarray
    generator: object | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != len(self.grid):
            raise ValueError("one support value per grid direction required")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def contains(self, x, tol: float = 1e-12) -> bool:
        """u . x <= h(u) + tol for every grid direction (outer approximation)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        return bool(np.all(self.grid.directions @ x <= self.values + tol))

    def __add__(self, other: "SupportSet") -> "SupportSet":
        return minkowski_sum(self, other)

    def __rmul__(self, lam: float) -> "SupportSet":
        return scale(lam, self)


def from_generator(g, grid: DirectionGrid) -> SupportSet:
    """Exact support values of a box, ball or zonotope on ``grid``."""
    if isinstance(g, Ball) and g.norm != grid.norm:
        raise ValueError("ball norm and grid norm differ")
    if np.asarray(g.center).size != grid.dim:
        raise ValueError("generator and grid dimensions differ")
    return SupportSet(grid, g.support(grid.directions), g)


def zero_set(grid: DirectionGrid) -> SupportSet:
    return SupportSet(grid, np.zeros(len(grid)), Box.point(np.zeros(grid.dim)))


def _check_grids(A: SupportSet, B: SupportSet):
    if A.grid is not B.grid and A.grid != B.grid:
        raise GridMismatch("support sets live on different direction grids")


def _sum_generators(a, b):
    if isinstance(a, Box) and isinstance(b, Box):
        return Box(a.center + b.center, a.radii + b.radii)
    if isinstance(a, Ball) and isinstance(b, Ball) and a.norm == b.norm:
        return Ball(a.center + b.center, a.radius + b.radius, a.norm)
    if isinstance(a, Zonotope) and isinstance(b, Zonotope):
        return Zonotope(a.center + b.center, np.vstack([a.generators, b.generators]))
    return None


def minkowski_sum(A: SupportSet, B: SupportSet) -> SupportSet:
    """A + B; support values add."""
    _check_grids(A, B)
    gen = _sum_generators(A.generator, B.generator) if A.generator is not None and B.generator is not None else None
    return SupportSet(A.grid, A.values + B.values, gen)


def scale(lam: float, A: SupportSet) -> SupportSet:
    """lam * A for lam >= 0; support values scale by lam."""
    lam = float(lam)
    if lam < 0:
        raise NegativeScalar("support values scale only by nonnegative factors")
    g = A.generator
    gen = None
    if isinstance(g, Box):
        gen = Box(lam * g.center, lam * g.radii)
    elif isinstance(g, Ball):
        gen = Ball(lam * g.center, lam * g.radius, g.norm)
    elif isinstance(g, Zonotope):
        gen = Zonotope(lam * g.center, lam * g.generators)
    return SupportSet(A.grid, lam * A.values, gen)


def hausdorff(A: SupportSet, B: SupportSet) -> float:
    """max over the grid of |h_A(u) - h_B(u)|."""
    _check_grids(A, B)
    return float(np.max(np.abs(A.values - B.values)))


def norm_of_set(A: SupportSet) -> float:
    """Hausdorff distance to {0}: max over the grid of |h_A(u)|."""
    return float(np.max(np.abs(A.values)))


def _neighbour_cones(grid: DirectionGrid, k: int = 8):
    """For each direction w, index sets of grid directions whose cone holds w.

    Returns triples (w, neighbours, coefficients) with w = coeffs . u[nbrs],
    coefficients nonnegative.
    """
    u = grid.directions
    d = grid.dim
    out = []
    if d == 1:
        return out
    if d == 2:
        ang = np.mod(np.arctan2(u[:, 1], u[:, 0]), 2 * math.pi)
        order = np.argsort(ang)
        n = order.size
        for pos in range(n):
            w, a, b = order[pos], order[pos - 1], order[(pos + 1) % n]
            basis = u[[a, b]].T
            if abs(np.linalg.det(basis)) < 1e-14:
                continue
            coef = np.linalg.solve(basis, u[w])
            if np.all(coef >= -1e-14):
                out.append((w, (a, b), np.maximum(coef, 0.0)))
        return out
    cos = u @ u.T
    for w in range(u.shape[0]):
        nbr = [j for j in np.argsort(-cos[w]) if j != w][:k]
        for combo in combinations(nbr, d):
            basis = u[list(combo)].T
            if abs(np.linalg.det(basis)) < 1e-12:
                continue
            coef = np.linalg.solve(basis, u[w])
            if np.all(coef >= -1e-14):
                out.append((w, combo, np.maximum(coef, 0.0)))
                break
    return out


_CHECK_CACHE: dict = {}


def _grid_checks(grid: DirectionGrid):
    key = hash(grid)
    hit = _CHECK_CACHE.get(key)
    if hit is None:
        u = grid.directions
        match = np.all(np.abs(u[:, None, :] + u[None, :, :]) <= 1e-12, axis=2)
        i, j = np.nonzero(np.triu(match))
        hit = (_neighbour_cones(grid), np.column_stack([i, j]))
        if len(_CHECK_CACHE) > 32:
            _CHECK_CACHE.clear()
        _CHECK_CACHE[key] = hit
    return hit


def validate_convexity(values, grid: DirectionGrid, tol: float | None = None) -> tuple[bool, float]:
    """Spot-check that grid values can be support values of a convex set.

    Two checks: for each direction w inside the cone of nearby directions
    u_i (w = sum a_i u_i, a_i >= 0), sublinearity requires
    h(w) <= sum a_i h(u_i); for antipodal pairs the width h(u) + h(-u) must
    be nonnegative. Returns (passed, worst violation), the violation being
    the largest positive excess (0.0 when nothing is violated).
    """
    h = np.asarray(values, dtype=float).reshape(-1)
    if h.size != len(grid):
        raise ValueError("one value per grid direction required")
    if len(grid) < 3 * grid.dim and grid.dim > 1:
        raise ValueError("convexity checks need at least 3 d directions")
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.max(np.abs(h))) if h.size else 1.0)
    cones, pairs = _grid_checks(grid)
    worst = 0.0
    for w, nbr, coef in cones:
        worst = max(worst, float(h[w] - coef @ h[list(nbr)]))
    if pairs.size:
        worst = max(worst, float(np.max(-(h[pairs[:, 0]] + h[pairs[:, 1]]))))
    return worst <= tol, worst


__all__ = [
    "Ball", "Box", "SupportSet", "Zonotope", "from_generator", "hausdorff", "minkowski_sum",
    "norm_of_set", "scale", "validate_convexity", "zero_set",
]
