"""Vector measures on the line with values in R^d.

Dual functionals are sampled by a ``DirectionGrid``; every "sup over the
dual unit ball" in this module is a maximum over the grid. For the sup and
one norms the grid contains all extreme points of the dual ball, so those
maxima are exact. For the euclidean norm they are lower bounds, and
``DirectionGrid.slack`` gives the factor that turns them into upper bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._parallel import map_ordered
from .domain import INF, MeasurableSet, _as_set
from .errors import NotHKLIntegrable
from .hk import HKResult, hk_integrate, hk_integrate_pieces, hk_integrate_unbounded
from .measures import ScalarMeasure, linear_combination

NORMS = ("euclidean", "sup", "one")
DUAL = {"euclidean": "euclidean", "sup": "one", "one": "sup"}


def vector_norm(x, kind: str = "euclidean") -> np.ndarray:
    """Norm of the last axis of ``x``."""
    x = np.asarray(x, dtype=float)
    if kind == "euclidean":
        return np.sqrt(np.sum(x * x, axis=-1))
    if kind == "sup":
        return np.max(np.abs(x), axis=-1)
    if kind == "one":
        return np.sum(np.abs(x), axis=-1)
    raise ValueError(f"unknown norm {kind!r}; expected one of {NORMS}")


def dual_norm(u, kind: str = "euclidean") -> np.ndarray:
    """Norm of functionals on (R^d, kind)."""
    return vector_norm(u, DUAL[kind])


# direction grids

def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _quasi_random_sphere(n: int, d: int) -> np.ndarray:
    from scipy.stats import norm, qmc

    pts = qmc.Halton(d, scramble=True, seed=0).random(n)
    g = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _dedupe(u: np.ndarray) -> np.ndarray:
    keep: list[np.ndarray] = []
    key = np.round(u, 12)
    _, first = np.unique(key, axis=0, return_index=True)
    for i in sorted(first):
        keep.append(u[i])
    return np.array(keep)


@dataclass(frozen=True)
class DirectionGrid:
    """Finite set of functionals of unit dual norm.

    ``norm`` names the norm of the primal space R^d; the directions are
    normalized in its dual norm and always include the signed basis vectors
    (only the positive ones for a hemisphere grid).
    """

    directions: np.ndarray
    norm: str = "euclidean"
    hemisphere: bool = False
    size_hint: int = 0

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")
        u = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if u.size == 0:
            raise ValueError("a direction grid needs at least one direction")
        n = dual_norm(u, self.norm)
        if np.any(n == 0):
            raise ValueError("zero functional in a direction grid")
        u = u / n[:, None]
        u.setflags(write=False)
        object.__setattr__(self, "directions", u)

    @classmethod
    def default(cls, d: int, norm: str = "euclidean", size: int | None = None,
                hemisphere: bool = False) -> "DirectionGrid":
        """Standard grid: equal angles in 2D (64), Fibonacci sphere in 3D (256).

        Dimensions above 3 use a scrambled Halton sample (256 * (d - 2)).
        The extreme points of the dual ball are added for the sup and one
        norms. A hemisphere grid keeps one direction of each antipodal pair.
        """
        if d < 1:
            raise ValueError("dimension must be positive")
        if d == 1:
            base = np.array([[1.0], [-1.0]])
            size = 2
        elif d == 2:
            size = size or 64
            ang = 2 * math.pi * np.arange(size) / size
            base = np.column_stack([np.cos(ang), np.sin(ang)])
            base[np.abs(base) < 1e-15] = 0.0
        elif d == 3:
            size = size or 256
            base = _fibonacci_sphere(size)
        else:
            size = size or 256 * (d - 2)
            base = _quasi_random_sphere(size, d)
        eye = np.eye(d)
        extra = [eye, -eye]
        if norm == "one":
            # extreme points of the sup-norm dual ball
            extra.append(np.array(list(product((-1.0, 1.0), repeat=d))))
        u = np.vstack([base] + extra)
        u = u / dual_norm(u, norm)[:, None]
        if hemisphere:
            u = u[[_positive_half(v) for v in u]]
        return cls(_dedupe(u), norm, hemisphere, size)

    def refined(self, factor: int = 2) -> "DirectionGrid":
        """Grid holding every current direction plus a ``factor`` times denser default."""
        d = self.dim
        if d == 1:
            return self
        finer = DirectionGrid.default(d, self.norm, self.size_hint * factor, self.hemisphere)
        u = np.vstack([self.directions, finer.directions])
        return DirectionGrid(_dedupe(u), self.norm, self.hemisphere, self.size_hint * factor)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self):
        return self.directions.shape[0]

    def __eq__(self, other):
        return (isinstance(other, DirectionGrid) and self.norm == other.norm
                and self.directions.shape == other.directions.shape
                and bool(np.array_equal(self.directions, other.directions)))

    def __hash__(self):
        return hash((self.norm, self.directions.tobytes()))

    @property
    def is_antipodal(self) -> bool:
        """True when -u is in the grid for every u (within 1e-12)."""
        u = self.directions
        for v in u:
            if not np.any(np.all(np.abs(u + v) <= 1e-12, axis=1)):
                return False
        return True

    @property
    def slack(self) -> float:
        """Factor c >= 1 with sup over the dual ball <= c * max over the grid.

        Valid for sublinear functions of the functional. Exact (1.0) for the
        sup and one norms, whose dual-ball extreme points are in the grid.
        For the euclidean norm the factor is 1 / cos(r), r the angular
        covering radius; in 3D and above r is estimated on a dense sample.
        """
        if self.norm != "euclidean" or self.dim == 1:
            return 1.0
        if self.hemisphere:
            return math.inf
        u = self.directions
        if self.dim == 2:
            ang = np.sort(np.mod(np.arctan2(u[:, 1], u[:, 0]), 2 * math.pi))
            gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
            r = float(gaps.max()) / 2
        else:
            probe = _fibonacci_sphere(20000) if self.dim == 3 else _quasi_random_sphere(20000, self.dim)
            cos = np.clip(probe @ u.T, -1.0, 1.0).max(axis=1)
            # sample estimate; widen by 10 percent for unsampled holes
            r = 1.1 * float(np.arccos(cos.min()))
        return 1.0 / math.cos(r) if r < math.pi / 2 else math.inf


def _positive_half(v: np.ndarray) -> bool:
    nz = np.nonzero(np.abs(v) > 1e-15)[0]
    return bool(nz.size) and v[nz[0]] > 0


# vector measures

@dataclass(frozen=True)
class VectorMeasure:
    """d scalar measures read as one R^d-valued measure.

    ``null_sets`` are declared sets of semivariation zero; they are checked
    at construction (every component must have zero variation on them).
    """

    components: tuple[ScalarMeasure, ...]
    norm: str = "euclidean"
    null_sets: tuple[MeasurableSet, ...] = ()

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a vector measure needs at least one component")
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")
        object.__setattr__(self, "components", comps)
        nulls = tuple(_as_set(N) for N in self.null_sets)
        object.__setattr__(self, "null_sets", nulls)
        for N in nulls:
            for m in comps:
                if m.total_variation().measure_of(N) != 0.0:
                    raise ValueError(f"declared null set {N} carries mass")

    @property
    def dim(self) -> int:
        return len(self.components)

    def value(self, A) -> np.ndarray:
        """mu(A) as a vector."""
        A = _as_set(A)
        return np.array([m.measure_of(A) for m in self.components])

    def default_grid(self, **kw) -> DirectionGrid:
        return DirectionGrid.default(self.dim, self.norm, **kw)

    def null_union(self) -> MeasurableSet:
        out = MeasurableSet.empty()
        for N in self.null_sets:
            out = out | N
        return out

    def support_hull(self) -> tuple[float, float]:
        lo, hi = [], []
        for m in self.components:
            if m.pieces or m.atoms:
                a, b = m.support_hull()
                lo.append(a)
                hi.append(b)
        if not lo:
            raise ValueError("zero measure has no support")
        return min(lo), max(hi)


def apply_functional(mu: VectorMeasure, x) -> ScalarMeasure:
    """The scalar measure A -> x . mu(A)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != mu.dim:
        raise ValueError(f"functional has {x.size} entries, measure has dimension {mu.dim}")
    return linear_combination(list(x), list(mu.components))


def pushforward_operator(u, mu: VectorMeasure, norm: str | None = None) -> VectorMeasure:
    """The measure A -> u mu(A) for a d' x d matrix ``u``."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[1] != mu.dim:
        raise ValueError(f"matrix has {u.shape[1]} columns, measure has dimension {mu.dim}")
    comps = tuple(apply_functional(mu, row) for row in u)
    return VectorMeasure(comps, norm or mu.norm, mu.null_sets)


def _variation_values(mu: VectorMeasure, A: MeasurableSet, grid: DirectionGrid) -> np.ndarray:
    def one(x):
        return apply_functional(mu, x).total_variation().measure_of(A)

    return np.array(map_ordered(one, grid.directions))


def semivariation(mu: VectorMeasure, A, grid: DirectionGrid | None = None, *,
                  bound: str = "lower") -> float:
    """max over the grid of |x mu|(A).

    ``bound="lower"`` returns the grid maximum, a lower bound of the
    semivariation; ``bound="upper"`` multiplies it by ``grid.slack``.
    """
    A = _as_set(A)
    if A.is_empty:
        return 0.0
    grid = grid or mu.default_grid()
    if grid.hemisphere and bound == "upper":
        # |x mu| is even in x, so the full grid has the same maximum
        grid = DirectionGrid.default(grid.dim, grid.norm, grid.size_hint or None)
    val = float(np.max(_variation_values(mu, A, grid)))
    if bound == "lower":
        return val
    if bound == "upper":
        return val * grid.slack
    raise ValueError("bound must be 'lower' or 'upper'")


def _dyadic_cells(A: MeasurableSet, depth: int, extra_points: Iterable[float] = ()) -> list[MeasurableSet]:
    """A cut into 2**depth equal pieces of its finite hull, plus its tail."""
    if A.is_empty:
        return []
    lo, hi = A.bounds
    tail = None
    if hi == INF:
        finite = [x for x in A.endpoints() if math.isfinite(x)] + [x for x in extra_points if math.isfinite(x)]
        top = max(finite + [lo + 1.0])
        tail = A & MeasurableSet.interval(top, INF, False, True)
        hi = top
    if lo == -INF:
        raise ValueError("sets must be bounded below")
    n = 1 << depth
    edges = [lo + (hi - lo) * k / n for k in range(n + 1)]
    edges[-1] = hi
    cells = []
    for k in range(n):
        cell = MeasurableSet.interval(edges[k], edges[k + 1], True, k == n - 1)
        piece = A & cell
        if not piece.is_empty:
            cells.append(piece)
    if tail is not None and not tail.is_empty:
        cells.append(tail)
    return cells


def variation(mu: VectorMeasure, A, depth: int = 10) -> float:
    """Sum of ||mu(A_i)|| over the dyadic partition of A at ``depth``.

    Dyadic refinement only increases the sum, so this is the supremum over
    dyadic partitions up to ``depth``.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    A = _as_set(A)
    atoms = [x for m in mu.components for x in m.atom_locations]
    cells = _dyadic_cells(A, depth, atoms)
    if not cells:
        return 0.0
    vals = np.array([mu.value(c) for c in cells])
    return math.fsum(vector_norm(vals, mu.norm).tolist())


def variation_integral(mu: VectorMeasure, A, tol: float = 1e-9) -> float:
    """Integral of ||density|| over A plus the norms of the atoms in A."""
    A = _as_set(A)
    if A.is_empty:
        return 0.0
    comps = mu.components
    pts = sorted({x for m in comps for x in m.breakpoints})

    def g(t):
        t = np.asarray(t, dtype=float)
        rho = np.stack([m.density(t) for m in comps], axis=-1)
        return vector_norm(rho, mu.norm)

    g.breakpoints = pts
    leb = ScalarMeasure.lebesgue()
    res = hk_integrate(g, A, leb, tol)
    atoms = sorted({x for m in comps for x in m.atom_locations if A.contains(x)})
    masses = [vector_norm(np.array([dict(m.atoms).get(x, 0.0) for m in comps]), mu.norm) for x in atoms]
    return math.fsum([res.value] + [float(v) for v in masses])


def ess_sup(f: Callable, A, mu: VectorMeasure, samples: int = 4097) -> float:
    """sup |f| over A minus the declared null sets of mu.

    Samples every part densely, then polishes the largest samples with a
    bounded scalar search on their neighbouring cells.
    """
    A = _as_set(A) - mu.null_union()
    if A.is_empty:
        return 0.0
    atoms = {x for m in mu.components for x in m.atom_locations}
    best = 0.0
    for part in A.parts:
        lo, hi = part.lo, part.hi
        if hi == INF:
            hi = max(lo + 1.0, 2 * abs(lo) + 1.0) * 1e6
        if lo == hi:
            t = np.array([lo])
        else:
            t = np.linspace(lo, hi, samples)
            if not part.closed_lo:
                t = t[1:]
            if not part.closed_hi or part.hi == INF:
                t = t[:-1]
            t = np.union1d(t, [x for x in atoms if part.contains(x)])
        t = t[~mu.null_union().contains(t)] if mu.null_sets else t
        if t.size == 0:
            continue
        v = np.abs(np.asarray(f(t), dtype=float).reshape(t.shape))
        best = max(best, float(np.max(v)))
        if t.size < 3:
            continue
        for k in np.argsort(v)[-5:]:
            a, b = t[max(k - 1, 0)], t[min(k + 1, t.size - 1)]
            if not b > a:
                continue
            r = minimize_scalar(lambda s: -abs(float(np.asarray(f(np.array([s]))).reshape(-1)[0])),
                                bounds=(a, b), method="bounded", options={"xatol": 1e-12})
            x = float(r.x)
            if A.contains(x):
                best = max(best, -float(r.fun))
    return best


# the KL-Henstock vector integral

@dataclass(frozen=True)
class KLResult:
    """Vector x_A with x . x_A matched to the scalar integrals over the grid."""

    x: np.ndarray
    residual: float
    mode: str
    values: np.ndarray = field(repr=False, compare=False, default=None)
    error_estimate: float = 0.0


def _direction_measure(mu: VectorMeasure, x, mode: str) -> ScalarMeasure:
    m = apply_functional(mu, x)
    if mode == "signed":
        return m
    if mode == "variation":
        return m.total_variation()
    raise ValueError("mode must be 'signed' or 'variation'")


def _assemble(U: np.ndarray, v: np.ndarray, tol: float, mode: str, antipodal: bool,
              err: float = 0.0) -> KLResult:
    x, *_ = np.linalg.lstsq(U, v, rcond=None)
    residual = float(np.max(np.abs(U @ x - v))) if v.size else 0.0
    if residual > 100 * tol:
        if mode == "variation" and antipodal:
            raise NotHKLIntegrable(
                "variation mode on an antipodally closed grid: the scalar values are even in "
                "the functional while x . x_A is odd, so no x_A exists unless all values vanish; "
                "use a hemisphere grid", residual, degenerate=True)
        raise NotHKLIntegrable(f"no vector matches the scalar integrals (residual {residual:.3g})", residual)
    return KLResult(x, residual, mode, v, err)


def kl_henstock_integral(f: Callable, A, mu: VectorMeasure, grid: DirectionGrid | None = None,
                         tol: float = 1e-9, mode: str = "signed", *, exempt: Iterable[float] = (),
                         envelope=None, **kwargs) -> KLResult:
    """Vector integral of f over A against mu.

    For each grid functional x the scalar integral v(x) of f against x mu
    (``mode="signed"``) or against |x mu| (``mode="variation"``) is computed;
    x_A solves x . x_A = v(x) over the grid in least squares. A residual
    above 100 * tol raises ``NotHKLIntegrable``.
    """
    A = _as_set(A)
    grid = grid or mu.default_grid(hemisphere=(mode == "variation"))
    if grid.dim != mu.dim:
        raise ValueError("grid and measure dimensions differ")
    exempt = tuple(exempt)

    def one(x):
        if A.is_empty:
            return HKResult(0.0, 0.0, 0)
        m = _direction_measure(mu, x, mode)
        if A.is_bounded:
            return hk_integrate(f, A, m, tol, exempt=exempt, **kwargs)
        return hk_integrate_unbounded(f, A, m, tol, envelope, exempt=exempt, **kwargs)

    res = map_ordered(one, grid.directions)
    v = np.array([r.value for r in res])
    err = max((r.error_estimate for r in res), default=0.0)
    return _assemble(grid.directions, v, tol, mode, grid.is_antipodal, err)


def _elementary(sets: Sequence[MeasurableSet]):
    """Disjoint points and open intervals generating every set in ``sets``.

    Returns the bounded pieces, an optional unbounded piece, and for each set
    the indices of the pieces it contains (the unbounded piece is index -1).
    """
    pts = sorted({x for S in sets for x in S.endpoints() if math.isfinite(x)})
    pieces: list[MeasurableSet] = []
    for x in pts:
        pieces.append(MeasurableSet.point(x))
    for a, b in zip(pts, pts[1:]):
        pieces.append(MeasurableSet.interval(a, b, False, False))
    if pts and any(not S.is_bounded for S in sets):
        tail = MeasurableSet.interval(pts[-1], INF, False, True)
    else:
        tail = None
    probes = np.array([P.parts[0].lo if P.parts[0].is_point else P.parts[0].lo + (P.parts[0].hi - P.parts[0].lo) / 2
                       for P in pieces])
    members = []
    for S in sets:
        idx = np.nonzero(S.contains(probes))[0].tolist() if pieces else []
        if tail is not None and not S.is_bounded:
            idx.append(-1)
        members.append(idx)
    return pieces, tail, members


def indefinite_integral(f: Callable, mu: VectorMeasure, sets: Sequence, grid: DirectionGrid | None = None,
                        tol: float = 1e-9, mode: str = "signed", *, exempt: Iterable[float] = (),
                        envelope=None, **kwargs) -> dict:
    """The set function A -> x_A over a finite family of sets.

    All sets are built from the same elementary pieces, integrated in one
    adaptive run per functional, so the values are additive up to rounding
    and each carries at most ``tol`` of integration error.
    """
    sets = [_as_set(S) for S in sets]
    grid = grid or mu.default_grid(hemisphere=(mode == "variation"))
    pieces, tail, members = _elementary(sets)
    exempt = tuple(exempt)

    def one(x):
        m = _direction_measure(mu, x, mode)
        vals = np.zeros(len(pieces))
        if pieces:
            vals, _ = hk_integrate_pieces(f, pieces, m, tol, exempt=exempt, **kwargs)
        t = 0.0
        if tail is not None:
            t = hk_integrate_unbounded(f, tail, m, tol, envelope, exempt=exempt, **kwargs).value
        return vals, t

    res = map_ordered(one, grid.directions)
    out = {}
    antipodal = grid.is_antipodal
    for S, idx in zip(sets, members):
        v = np.array([math.fsum([vals[k] if k >= 0 else t for k in idx]) for vals, t in res])
        out[S] = _assemble(grid.directions, v, tol, mode, antipodal)
    return out


def dyadic_family(lo: float, hi: float, depth: int = 8) -> list[MeasurableSet]:
    """All dyadic subintervals of [lo, hi] down to ``depth``; half-open except at hi."""
    fam = []
    for k in range(depth + 1):
        n = 1 << k
        for j in range(n):
            a = lo + (hi - lo) * j / n
            b = hi if j == n - 1 else lo + (hi - lo) * (j + 1) / n
            fam.append(MeasurableSet.interval(a, b, True, j == n - 1))
    return fam


def alexiewicz_norm(f: Callable, mu: VectorMeasure, grid: DirectionGrid | None = None,
                    sets: Sequence | None = None, tol: float = 1e-9, *, depth: int = 8,
                    exempt: Iterable[float] = (), **kwargs) -> float:
    """max over grid and sets of |integral of f over A against |x mu||.

    The default family is every dyadic subinterval of the support hull of mu
    down to ``depth``.
    """
    if sets is None:
        lo, hi = mu.support_hull()
        sets = dyadic_family(lo, hi, depth)
    sets = [_as_set(S) for S in sets]
    if not sets:
        return 0.0
    grid = grid or mu.default_grid()
    pieces, tail, members = _elementary(sets)
    exempt = tuple(exempt)

    def one(x):
        m = apply_functional(mu, x).total_variation()
        vals = np.zeros(len(pieces))
        if pieces:
            vals, _ = hk_integrate_pieces(f, pieces, m, tol, exempt=exempt, **kwargs)
        t = 0.0
        if tail is not None:
            t = hk_integrate_unbounded(f, tail, m, tol, exempt=exempt, **kwargs).value
        return max(abs(math.fsum([vals[k] if k >= 0 else t for k in idx])) for idx in members)

    return float(max(map_ordered(one, grid.directions)))


__all__ = [
    "DirectionGrid", "KLResult", "VectorMeasure", "alexiewicz_norm", "apply_functional",
    "dual_norm", "dyadic_family", "ess_sup", "indefinite_integral", "kl_henstock_integral",
    "pushforward_operator", "semivariation", "variation", "variation_integral", "vector_norm",
]
