"""Set-valued measures M(A) = integral over A of Gamma(t) d(base).

Gamma(t) is a box, ball or fixed-direction zonotope whose parameters are
functions of t. Support values are what gets integrated: the support of
M(A) in direction u is the integral over A of sigma(u, Gamma(t)) against
the base measure, and the set-valued integral of f is assembled direction
by direction and then checked for convexity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np

from ._parallel import map_ordered
from .convex import Ball, Box, SupportSet, Zonotope, validate_convexity, zero_set
from .domain import MeasurableSet, _as_set
from .errors import NotConvexlyIntegrable
from .hk import hk_integrate, hk_integrate_pieces, hk_integrate_unbounded
from .measures import DensityPiece, ScalarMeasure
from .vector import DirectionGrid, VectorMeasure, _dyadic_cells, _elementary, dual_norm, vector_norm


def _as_profile(p) -> Callable:
    if callable(p):
        return p
    c = float(p)

    def const(t):
        return np.full(np.shape(t), c)

    const.breakpoints = []
    return const


def _eval(p: Callable, t: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(p(t), dtype=float), t.shape)


def _profile_breaks(profiles) -> list[float]:
    pts = set()
    for p in profiles:
        pts.update(float(x) for x in getattr(p, "breakpoints", ()) or ())
    return sorted(pts)


class _Density:
    """Shared plumbing: parameters as scalar profiles plus a linear read-out.

    sigma(u, Gamma(t)) = coefficients(u) . profiles(t), which lets any
    support value be assembled from a few scalar integrals.
    """

    profiles: tuple
    norm: str = "euclidean"

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def breakpoints(self) -> list[float]:
        return _profile_breaks(self.profiles)

    def profile_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.stack([_eval(p, t) for p in self.profiles], axis=-1)

    def support_at(self, u, t) -> np.ndarray:
        """sigma(u, Gamma(t)) for each t."""
        return self.profile_values(t) @ self.coefficients(np.asarray(u, dtype=float))

    def support_profile(self, u) -> Callable:
        u = np.asarray(u, dtype=float)

        def h(t):
            return self.support_at(u, t)

        h.breakpoints = self.breakpoints
        return h

    def _nonneg_indices(self) -> range:
        return range(self.dim, len(self.profiles))

    def check_nonnegative(self, lo: float, hi: float, samples: int = 1025):
        t = np.linspace(lo, hi, samples)
        vals = self.profile_values(t)[:, list(self._nonneg_indices())]
        if np.any(vals < 0):
            raise ValueError("radius or weight profiles take negative values")


class BoxDensity(_Density):
    """Gamma(t) = box with center c(t) and radii r(t)."""

    def __init__(self, center: Sequence, radii: Sequence, norm: str = "euclidean"):
        if len(center) != len(radii):
            raise ValueError("center and radii need the same length")
        self.center = tuple(_as_profile(c) for c in center)
        self.radii = tuple(_as_profile(r) for r in radii)
        self.profiles = self.center + self.radii
        self.norm = norm

    def coefficients(self, u):
        return np.concatenate([u, np.abs(u)])

    def generator_at(self, t: float) -> Box:
        v = self.profile_values(np.array([t]))[0]
        return Box(v[: self.dim], v[self.dim:])

    def generator_from(self, totals) -> Box:
        return Box(totals[: self.dim], np.maximum(totals[self.dim:], 0.0))

    def point_at(self, t, u=None) -> np.ndarray:
        v = self.profile_values(t)
        c, r = v[..., : self.dim], v[..., self.dim:]
        return c if u is None else c + np.sign(u) * r

    def norm_at(self, t) -> np.ndarray:
        v = self.profile_values(t)
        return vector_norm(np.abs(v[..., : self.dim]) + v[..., self.dim:], self.norm)


class BallDensity(_Density):
    """Gamma(t) = ball of radius r(t) around c(t) in ``norm``."""

    def __init__(self, center: Sequence, radius, norm: str = "euclidean"):
        self.center = tuple(_as_profile(c) for c in center)
        self.radius = _as_profile(radius)
        self.profiles = self.center + (self.radius,)
        self.norm = norm

    def coefficients(self, u):
        return np.concatenate([u, [float(dual_norm(u, self.norm))]])

    def generator_at(self, t: float) -> Ball:
        v = self.profile_values(np.array([t]))[0]
        return Ball(v[: self.dim], max(v[-1], 0.0), self.norm)

    def generator_from(self, totals) -> Ball:
        return Ball(totals[: self.dim], max(totals[-1], 0.0), self.norm)

    def point_at(self, t, u=None) -> np.ndarray:
        v = self.profile_values(t)
        c = v[..., : self.dim]
        if u is None:
            return c
        return c + v[..., -1:] * Ball(np.zeros(self.dim), 1.0, self.norm).argmax(u)[None, :]

    def norm_at(self, t) -> np.ndarray:
        v = self.profile_values(t)
        return vector_norm(v[..., : self.dim], self.norm) + v[..., -1]


class ZonotopeDensity(_Density):
    """Gamma(t) = c(t) + sum_j w_j(t) [-g_j, g_j] with fixed directions g_j."""

    def __init__(self, center: Sequence, generators, weights: Sequence, norm: str = "euclidean"):
        self.center = tuple(_as_profile(c) for c in center)
        self.generators = np.asarray(generators, dtype=float).reshape(-1, len(self.center))
        if len(weights) != self.generators.shape[0]:
            raise ValueError("one weight profile per generator required")
        self.weights = tuple(_as_profile(w) for w in weights)
        self.profiles = self.center + self.weights
        self.norm = norm

    def coefficients(self, u):
        return np.concatenate([u, np.abs(self.generators @ u)])

    def generator_at(self, t: float) -> Zonotope:
        v = self.profile_values(np.array([t]))[0]
        return Zonotope(v[: self.dim], v[self.dim:, None] * self.generators)

    def generator_from(self, totals) -> Zonotope:
        return Zonotope(totals[: self.dim], np.maximum(totals[self.dim:], 0.0)[:, None] * self.generators)

    def point_at(self, t, u=None) -> np.ndarray:
        v = self.profile_values(t)
        c = v[..., : self.dim]
        if u is None:
            return c
        s = np.sign(self.generators @ np.asarray(u, dtype=float))
        return c + (v[..., self.dim:] * s) @ self.generators

    def norm_at(self, t) -> np.ndarray:
        v = self.profile_values(t)
        k = self.generators.shape[0]
        signs = np.array(list(product((-1.0, 1.0), repeat=k))) if k else np.zeros((1, 0))
        # vertices: c + sum_j s_j w_j g_j, for every sign pattern s
        verts = v[..., None, : self.dim] + (signs * v[..., None, self.dim:]) @ self.generators
        return vector_norm(verts, self.norm).max(axis=-1)


@dataclass(frozen=True)
class SetValuedMeasure:
    """M(A) = integral over A of Gamma d(base), base nonnegative."""

    density: _Density
    base: ScalarMeasure

    def __post_init__(self):
        if not self.base.is_nonnegative():
            raise ValueError("the base measure must be nonnegative")
        if self.base.pieces:
            lo, hi = self.base.support_hull()
            if math.isfinite(lo) and math.isfinite(hi):
                self.density.check_nonnegative(lo, hi)

    @property
    def dim(self) -> int:
        return self.density.dim

    @property
    def norm(self) -> str:
        return self.density.norm

    def default_grid(self, **kw) -> DirectionGrid:
        return DirectionGrid.default(self.dim, self.norm, **kw)

    def direction_measure(self, u) -> ScalarMeasure:
        """The scalar measure A -> sigma(u, M(A))."""
        h = self.density.support_profile(u)
        return _weighted(self.base, h, self.density.breakpoints)


class _Product:
    def __init__(self, a, b):
        self.a, self.b = a, b

    def __call__(self, t):
        return np.asarray(self.a(t), dtype=float) * np.asarray(self.b(t), dtype=float)


def _weighted(base: ScalarMeasure, h: Callable, breaks: Iterable[float]) -> ScalarMeasure:
    """The measure with density h * (base density) and atoms h(a) * w."""
    breaks = sorted(set(breaks))
    pieces = []
    for p in base.pieces:
        pts = [p.lo] + [b for b in breaks if p.lo < b < p.hi] + [p.hi]
        for a, b in zip(pts, pts[1:]):
            pieces.append(DensityPiece(a, b, func=_Product(h, p)))
    atoms = []
    if base.atoms:
        locs = np.array([x for x, _ in base.atoms])
        hv = np.asarray(h(locs), dtype=float)
        atoms = [(x, float(v) * w) for (x, w), v in zip(base.atoms, hv)]
    if base.tail_mass != 0.0:
        raise ValueError("set-valued densities need a base without mass at +inf")
    return ScalarMeasure(tuple(pieces), tuple(atoms))


def _grid_for(M: SetValuedMeasure, grid: DirectionGrid | None) -> DirectionGrid:
    grid = grid or M.default_grid()
    if grid.dim != M.dim:
        raise ValueError("grid and measure dimensions differ")
    if grid.norm != M.norm:
        raise ValueError("grid norm and density norm differ")
    return grid


def _set_integrals(f, sets, m: ScalarMeasure, tol, exempt=(), **kw) -> np.ndarray:
    """Integral of f over each set against m, from one run over elementary pieces."""
    pieces, tail, members = _elementary(sets)
    vals = np.zeros(len(pieces))
    if pieces:
        vals, _ = hk_integrate_pieces(f, pieces, m, tol, exempt=exempt, **kw)
    t = 0.0
    if tail is not None:
        t = hk_integrate_unbounded(f, tail, m, tol, exempt=exempt, **kw).value
    return np.array([math.fsum([vals[k] if k >= 0 else t for k in idx]) for idx in members])


def _profile_totals(M: SetValuedMeasure, sets, tol, f=None) -> np.ndarray:
    """Integrals of each parameter profile (times f) over each set, shape (sets, profiles)."""
    out = []
    for p in M.density.profiles:
        g = p if f is None else _Product(f, p)
        g_b = _profile_breaks([p, f] if f is not None else [p])
        if g_b and not hasattr(g, "breakpoints"):
            g.breakpoints = g_b
        out.append(_set_integrals(g, sets, M.base, tol))
    return np.array(out).T


def sv_measure_of(M: SetValuedMeasure, A, grid: DirectionGrid | None = None, tol: float = 1e-10) -> SupportSet:
    """M(A) as support values.

    sigma(u, Gamma(t)) is linear in a few parameter profiles, so the support
    integral in every direction is assembled from one integral per profile.
    The result keeps its closed-form generator.
    """
    return sv_measure_of_many(M, [A], grid, tol)[0]


def sv_measure_of_many(M: SetValuedMeasure, sets: Sequence, grid: DirectionGrid | None = None,
                       tol: float = 1e-10) -> list[SupportSet]:
    grid = _grid_for(M, grid)
    sets = [_as_set(A) for A in sets]
    out: list[SupportSet | None] = [None] * len(sets)
    live = [i for i, A in enumerate(sets) if not A.is_empty]
    for i, A in enumerate(sets):
        if A.is_empty:
            out[i] = zero_set(grid)
    if live:
        totals = _profile_totals(M, [sets[i] for i in live], tol)
        coef = np.array([M.density.coefficients(u) for u in grid.directions])
        for row, i in zip(totals, live):
            gen = M.density.generator_from(row)
            out[i] = SupportSet(grid, coef @ row, gen)
    return out


def _check_nonnegative_f(f, A: MeasurableSet, samples: int = 2049):
    for part in A.parts:
        hi = part.hi if math.isfinite(part.hi) else part.lo + 1e6
        t = np.linspace(part.lo, hi, samples) if hi > part.lo else np.array([part.lo])
        if np.any(np.asarray(f(t), dtype=float) < 0):
            raise ValueError("this operation needs a nonnegative integrand")


def _direction_values(f, sets, M: SetValuedMeasure, grid: DirectionGrid, tol, exempt=(), **kw) -> np.ndarray:
    """(sets, directions) matrix of integrals of f against sigma(u, M(.))."""

    def one(u):
        return _set_integrals(f, sets, M.direction_measure(u), tol, exempt, **kw)

    return np.array(map_ordered(one, grid.directions)).T


def _validated(values, grid: DirectionGrid, tol: float) -> SupportSet:
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    ok, worst = validate_convexity(values, grid, 4 * tol + 1e-12 * scale)
    if not ok:
        raise NotConvexlyIntegrable(
            f"support values are not sublinear (worst excess {worst:.3g}); no convex set has them", worst)
    return SupportSet(grid, values)


def sv_kl_henstock_integral(f: Callable, A, M: SetValuedMeasure, grid: DirectionGrid | None = None,
                            tol: float = 1e-9, *, exempt: Iterable[float] = (), **kw) -> SupportSet:
    """Set-valued integral of f over A against M.

    Direction by direction, f is integrated against the scalar measure
    sigma(u, M(.)); the values must pass ``validate_convexity`` to be the
    support of a convex set, otherwise ``NotConvexlyIntegrable`` is raised.
    """
    return sv_indefinite(f, M, [A], grid, tol, exempt=exempt, require_nonnegative=False, **kw)[_as_set(A)]


def sv_indefinite(f: Callable, M: SetValuedMeasure, sets: Sequence, grid: DirectionGrid | None = None,
                  tol: float = 1e-9, *, exempt: Iterable[float] = (), require_nonnegative: bool = True,
                  **kw) -> dict:
    """The set function A -> set-valued integral of f over A, on a finite family."""
    grid = _grid_for(M, grid)
    sets = [_as_set(A) for A in sets]
    if require_nonnegative:
        for A in sets:
            _check_nonnegative_f(f, A)
    out = {}
    live = [A for A in sets if not A.is_empty]
    if live:
        vals = _direction_values(f, live, M, grid, tol, tuple(exempt), **kw)
        for A, row in zip(live, vals):
            out[A] = _validated(row, grid, tol)
    for A in sets:
        if A.is_empty:
            out[A] = zero_set(grid)
    return out


def selection(M: SetValuedMeasure, rule: str = "steiner", direction=None) -> VectorMeasure:
    """A vector measure whose values lie in M(A) for every A.

    ``rule="steiner"`` uses the center of Gamma(t) (its Steiner point, all
    three shapes being centrally symmetric); ``rule="extremal"`` uses a
    point of Gamma(t) maximizing ``direction`` . x.
    """
    if rule == "steiner":
        u = None
    elif rule == "extremal":
        if direction is None:
            raise ValueError("extremal selections need a direction")
        u = np.asarray(direction, dtype=float).reshape(-1)
        if u.size != M.dim:
            raise ValueError("direction and measure dimensions differ")
    else:
        raise ValueError("rule must be 'steiner' or 'extremal'")
    comps = []
    for i in range(M.dim):
        def coord(t, i=i):
            return M.density.point_at(np.asarray(t, dtype=float), u)[..., i]

        comps.append(_weighted(M.base, coord, M.density.breakpoints))
    return VectorMeasure(tuple(comps), M.norm)


def sv_variation(M: SetValuedMeasure, A, depth: int = 6, grid: DirectionGrid | None = None,
                 tol: float = 1e-10) -> float:
    """Sum of norm_of_set(M(A_i)) over the dyadic partition of A at ``depth``."""
    from .convex import norm_of_set

    if depth < 0:
        raise ValueError("depth must be nonnegative")
    A = _as_set(A)
    cells = _dyadic_cells(A, depth, M.base.atom_locations)
    if not cells:
        return 0.0
    return math.fsum(norm_of_set(S) for S in sv_measure_of_many(M, cells, grid, tol))


def sv_variation_integral(M: SetValuedMeasure, A, tol: float = 1e-9, f: Callable | None = None) -> float:
    """Integral over A of |f| * (largest norm in Gamma(t)) against the base.

    With f omitted this is the limit of ``sv_variation`` under refinement.
    """
    A = _as_set(A)
    if A.is_empty:
        return 0.0
    dens = M.density

    def g(t):
        t = np.asarray(t, dtype=float)
        out = dens.norm_at(t)
        if f is not None:
            out = out * np.abs(np.asarray(f(t), dtype=float))
        return out

    g.breakpoints = sorted(set(dens.breakpoints) | set(getattr(f, "breakpoints", ()) or ()))
    return hk_integrate(g, A, M.base, tol).value


def rn_equality_check(f: Callable, M: SetValuedMeasure, A, grid: DirectionGrid | None = None,
                      tol: float = 1e-9) -> float:
    """Hausdorff gap between the set-valued integral of f against M and the
    direct integral of f(t) sigma(u, Gamma(t)) against the base measure.
    """
    grid = _grid_for(M, grid)
    A = _as_set(A)
    _check_nonnegative_f(f, A)
    W = sv_kl_henstock_integral(f, A, M, grid, tol)
    if A.is_empty:
        return float(np.max(np.abs(W.values)))

    def direct(u):
        h = M.density.support_profile(u)
        g = _Product(f, h)
        g.breakpoints = _profile_breaks([f, h])
        return hk_integrate(g, A, M.base, tol).value

    d = np.array(map_ordered(direct, grid.directions))
    return float(np.max(np.abs(W.values - d)))


__all__ = [
    "BallDensity", "BoxDensity", "SetValuedMeasure", "ZonotopeDensity", "rn_equality_check",
    "selection", "sv_indefinite", "sv_kl_henstock_integral", "sv_measure_of", "sv_measure_of_many",
    "sv_variation", "sv_variation_integral",
]
