"""Intervals, finite unions of intervals, gauges and tagged partitions.

The working domain is a closed interval [a, b] or the compactified half line
[a, +inf]. Sets are finite unions of intervals with explicit open/closed ends,
kept in a canonical form (sorted, disjoint, maximal) so that equality of sets
is equality of their part lists.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NonFiniteSum, RefinementBudgetExceeded

INF = math.inf


@dataclass(frozen=True)
class Interval:
    """A single interval with explicit closure flags.

    ``hi`` may be ``+inf``; with ``closed_hi=True`` the interval then contains
    the point at infinity of the compactified half line.
    """

    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = True

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if self.lo == -INF:
            raise ValueError("intervals must be bounded below")
        if self.hi < self.lo:
            raise ValueError(f"empty interval with hi < lo: {self.lo}, {self.hi}")

    @property
    def is_empty(self) -> bool:
        return self.lo == self.hi and not (self.closed_lo and self.closed_hi)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi and self.closed_lo and self.closed_hi

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, t):
        """Membership test; works elementwise on arrays."""
        t = np.asarray(t, dtype=float)
        left = (t >= self.lo) if self.closed_lo else (t > self.lo)
        right = (t <= self.hi) if self.closed_hi else (t < self.hi)
        out = left & right
        return bool(out) if out.ndim == 0 else out

    def __str__(self) -> str:
        if self.is_point:
            return "{" + _fmt(self.lo) + "}"
        return ("[" if self.closed_lo else "(") + f"{_fmt(self.lo)}, {_fmt(self.hi)}" + (
            "]" if self.closed_hi else ")")


def _fmt(x: float) -> str:
    if x == INF:
        return "inf"
    return repr(float(x))


class MeasurableSet:
    """Finite union of intervals in canonical form.

    Build with ``MeasurableSet([Interval(...), ...])`` or ``MeasurableSet.parse``.
    Supports ``|``, ``&`` and ``-`` for union, intersection and difference.
    """

    __slots__ = ("parts",)

    def __init__(self, parts: Iterable[Interval] = ()):
        parts = [p for p in parts if not p.is_empty]
        self.parts: tuple[Interval, ...] = _canonical(parts)

    @classmethod
    def interval(cls, lo: float, hi: float, closed_lo: bool = True, closed_hi: bool = True):
        return cls([Interval(lo, hi, closed_lo, closed_hi)])

    @classmethod
    def point(cls, x: float):
        return cls([Interval(x, x)])

    @classmethod
    def empty(cls):
        return cls(())

    @classmethod
    def parse(cls, text: str) -> "MeasurableSet":
        """Parse strings like ``"[0,1]"``, ``"(0,1] u [2,inf]"`` or ``"{0.5}"``."""
        text = text.strip()
        if text in ("", "{}", "empty"):
            return cls.empty()
        pieces = re.split(r"\s*(?:\bu\b|∪|\bU\b)\s*", text)
        parts = []
        for piece in pieces:
            m = re.fullmatch(r"([\[\(])\s*([^,]+?)\s*,\s*([^,]+?)\s*([\]\)])", piece.strip())
            if m:
                lo, hi = _parse_num(m.group(2)), _parse_num(m.group(3))
                parts.append(Interval(lo, hi, m.group(1) == "[", m.group(4) == "]"))
                continue
            m = re.fullmatch(r"\{\s*([^,]+?)\s*\}", piece.strip())
            if m:
                x = _parse_num(m.group(1))
                parts.append(Interval(x, x))
                continue
            raise ValueError(f"cannot parse set piece {piece!r}")
        return cls(parts)

    @property
    def is_empty(self) -> bool:
        return not self.parts

    @property
    def is_bounded(self) -> bool:
        return all(p.hi < INF for p in self.parts)

    @property
    def lebesgue_length(self) -> float:
        return math.fsum(p.length for p in self.parts)

    @property
    def bounds(self) -> tuple[float, float]:
        if not self.parts:
            raise ValueError("empty set has no bounds")
        return self.parts[0].lo, self.parts[-1].hi

    def endpoints(self) -> list[float]:
        pts = []
        for p in self.parts:
            pts.append(p.lo)
            pts.append(p.hi)
        return pts

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=bool)
        for p in self.parts:
            out |= p.contains(t)
        return bool(out) if out.ndim == 0 else out

    def __or__(self, other):
        return union(self, other)

    def __and__(self, other):
        return intersection(self, other)

    def __sub__(self, other):
        return difference(self, other)

    def __eq__(self, other):
        return isinstance(other, MeasurableSet) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __repr__(self):
        return f"MeasurableSet({str(self)!r})"

    def __str__(self):
        if not self.parts:
            return "{}"
        return " u ".join(str(p) for p in self.parts)


def _parse_num(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "+inf", "infinity", "+infinity", "∞", "+∞"):
        return INF
    return float(s)


def _as_set(A) -> MeasurableSet:
    if isinstance(A, MeasurableSet):
        return A
    if isinstance(A, Interval):
        return MeasurableSet([A])
    if isinstance(A, str):
        return MeasurableSet.parse(A)
    raise TypeError(f"expected a MeasurableSet, got {type(A).__name__}")


def _elementary_pieces(points: Sequence[float]):
    """Points and the open gaps between consecutive points, left to right."""
    pieces = []
    for i, x in enumerate(points):
        pieces.append(("pt", x, x))
        if i + 1 < len(points):
            pieces.append(("gap", x, points[i + 1]))
    return pieces


def _probe(piece) -> float:
    kind, a, b = piece
    if kind == "pt":
        return a
    if b == INF:
        return a + 1.0 + abs(a)
    return a + (b - a) / 2


def _merge(pieces, member: Callable[[float], bool]) -> tuple[Interval, ...]:
    out = []
    start = None
    last = None
    for piece in pieces:
        if member(_probe(piece)):
            if start is None:
                start = piece
            last = piece
        elif start is not None:
            out.append(_run_interval(start, last))
            start = None
    if start is not None:
        out.append(_run_interval(start, last))
    return tuple(out)


def _run_interval(start, last) -> Interval:
    lo, closed_lo = (start[1], True) if start[0] == "pt" else (start[1], False)
    hi, closed_hi = (last[1], True) if last[0] == "pt" else (last[2], False)
    return Interval(lo, hi, closed_lo, closed_hi)


def _canonical(parts: list[Interval]) -> tuple[Interval, ...]:
    if not parts:
        return ()
    points = sorted({x for p in parts for x in (p.lo, p.hi)})

    def member(t):
        return any(p.contains(t) for p in parts)

    return _merge(_elementary_pieces(points), member)


def _combine(A, B, rule) -> MeasurableSet:
    A, B = _as_set(A), _as_set(B)
    points = sorted(set(A.endpoints()) | set(B.endpoints()))
    if not points:
        return MeasurableSet.empty()
    out = MeasurableSet.empty()
    out.parts = _merge(_elementary_pieces(points), lambda t: rule(A.contains(t), B.contains(t)))
    return out


def union(A, B) -> MeasurableSet:
    return _combine(A, B, lambda a, b: a or b)


def intersection(A, B) -> MeasurableSet:
    return _combine(A, B, lambda a, b: a and b)


def difference(A, B) -> MeasurableSet:
    return _combine(A, B, lambda a, b: a and not b)


def symmetric_difference(A, B) -> MeasurableSet:
    return _combine(A, B, lambda a, b: a != b)


def indicator(A, t):
    """Indicator function of ``A`` evaluated at ``t`` (array in, float array out)."""
    return np.asarray(_as_set(A).contains(t), dtype=float)


@dataclass(frozen=True)
class Gauge:
    """Positive half-width function on the finite part of the domain.

    ``d`` maps an array of points to an array of positive half-widths, so the
    neighbourhood of a finite point x is the open interval (x - d(x), x + d(x)).
    ``b_inf`` fixes the neighbourhood (b_inf, +inf] of the point at infinity.
    """

    d: Callable[[np.ndarray], np.ndarray]
    b_inf: float | None = None

    @classmethod
    def constant(cls, h: float, b_inf: float | None = None) -> "Gauge":
        if not h > 0:
            raise ValueError("gauge half-width must be positive")
        return cls(lambda x: np.full(np.shape(x), float(h)), b_inf)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vals = np.asarray(self.d(x), dtype=float)
        if vals.shape != x.shape:
            vals = np.broadcast_to(vals, x.shape).astype(float)
        return vals


@dataclass(frozen=True)
class TaggedPartition:
    """Cells with one tag each; tags may be ``+inf`` for a cell reaching infinity."""

    cells: tuple[Interval, ...]
    tags: np.ndarray

    def __post_init__(self):
        tags = np.asarray(self.tags, dtype=float)
        object.__setattr__(self, "tags", tags)
        if len(self.cells) != tags.shape[0]:
            raise ValueError("need exactly one tag per cell")
        for c, x in zip(self.cells, tags):
            if c.is_empty:
                raise ValueError("partition cells must be nonempty")
            if not c.contains(x):
                raise ValueError(f"tag {x} is not in its cell {c}")
        order = sorted(range(len(self.cells)), key=lambda i: (self.cells[i].lo, self.cells[i].hi))
        for i, j in zip(order, order[1:]):
            a, b = self.cells[i], self.cells[j]
            if b.lo < a.hi:
                raise ValueError(f"cells {a} and {b} overlap in more than an endpoint")

    def __len__(self):
        return len(self.cells)

    def union(self) -> MeasurableSet:
        return MeasurableSet(self.cells)

    def shared_points(self) -> list[float]:
        """Points that belong to two cells (allowed only where the measure is null)."""
        pts = []
        cells = sorted(self.cells, key=lambda c: (c.lo, c.hi))
        for a, b in zip(cells, cells[1:]):
            if b.lo == a.hi and a.closed_hi and b.closed_lo and a.hi not in pts:
                pts.append(a.hi)
        return pts

    def covers(self, A) -> bool:
        """True when the cells' union differs from ``A`` by a Lebesgue-null set."""
        diff = symmetric_difference(self.union(), _as_set(A))
        return diff.lebesgue_length == 0.0


def is_delta_fine(P: TaggedPartition, gauge: Gauge) -> bool:
    """Every cell lies inside the gauge neighbourhood of its tag."""
    tags = P.tags
    finite = np.isfinite(tags)
    if np.any(finite):
        x = tags[finite]
        d = gauge(x)
        if np.any(~(d > 0)):
            return False
        cells = [c for c, f in zip(P.cells, finite) if f]
        lo = np.array([c.lo for c in cells])
        hi = np.array([c.hi for c in cells])
        cl = np.array([c.closed_lo for c in cells])
        ch = np.array([c.closed_hi for c in cells])
        left_ok = np.where(cl, lo > x - d, lo >= x - d)
        right_ok = np.where(ch, hi < x + d, hi <= x + d)
        if not np.all(left_ok & right_ok):
            return False
    for c, t in zip(P.cells, tags):
        if t == INF:
            if gauge.b_inf is None:
                return False
            if not (c.lo > gauge.b_inf or (c.lo == gauge.b_inf and not c.closed_lo)):
                return False
    return True


def refine_to_delta_fine(A, gauge: Gauge, max_cells: int = 10**6) -> TaggedPartition:
    """Build a gauge-fine tagged partition of ``A`` by dyadic bisection.

    Each part is bisected level by level; a cell is kept as soon as it is
    shorter than the gauge at its midpoint or at one of its endpoints, which
    then becomes its tag. Cells are therefore shorter than d(tag), twice
    as fine as the gauge demands. A part reaching
    +inf gets a tail cell (b_inf, +inf] tagged +inf.
    """
    A = _as_set(A)
    cells: list[Interval] = []
    tags: list[float] = []
    for part in A.parts:
        if part.is_point:
            cells.append(part)
            tags.append(part.lo)
            continue
        lo, hi, cl, ch = part.lo, part.hi, part.closed_lo, part.closed_hi
        tail = None
        if hi == INF:
            if gauge.b_inf is None:
                raise ValueError("gauge needs b_inf to cover an unbounded set")
            if not ch:
                raise ValueError("unbounded parts must contain the point at infinity")
            if gauge.b_inf < lo or (gauge.b_inf == lo and not cl):
                cells.append(part)
                tags.append(INF)
                continue
            tail = Interval(gauge.b_inf, INF, False, True)
            hi, ch = gauge.b_inf, True
        if hi > lo:
            c, t = _bisect_part(lo, hi, cl, ch, gauge, max_cells - len(cells))
            cells.extend(c)
            tags.extend(t)
        elif cl and ch:
            cells.append(Interval(lo, lo))
            tags.append(lo)
        if tail is not None:
            cells.append(tail)
            tags.append(INF)
        if len(cells) > max_cells:
            raise RefinementBudgetExceeded(f"more than {max_cells} cells needed")
    return TaggedPartition(tuple(cells), np.array(tags, dtype=float))


def _bisect_part(lo, hi, closed_lo, closed_hi, gauge, budget):
    """Bisect [lo, hi] until every cell has an admissible tag.

    Returns cells in left-to-right order. Interior cells are closed on both
    sides, sharing endpoints with their neighbours.
    """
    done_lo: list[np.ndarray] = []
    done_hi: list[np.ndarray] = []
    done_tag: list[np.ndarray] = []
    L = np.array([lo])
    R = np.array([hi])
    count = 0
    while L.size:
        mid = L + (R - L) / 2
        if np.any((mid <= L) | (mid >= R)):
            raise RefinementBudgetExceeded("gauge requires cells below floating-point resolution")
        d_mid = gauge(mid)
        d_lo = gauge(L)
        d_hi = gauge(R)
        open_lo = (L == lo) & (not closed_lo)
        open_hi = (R == hi) & (not closed_hi)
        ok_mid = R - L < d_mid
        ok_lo = ~open_lo & (R < L + d_lo)
        ok_hi = ~open_hi & (L > R - d_hi)
        tag = np.where(ok_mid, mid, np.where(ok_lo, L, R))
        fine = ok_mid | ok_lo | ok_hi
        done_lo.append(L[fine])
        done_hi.append(R[fine])
        done_tag.append(tag[fine])
        count += int(fine.sum())
        L, R, mid = L[~fine], R[~fine], mid[~fine]
        if count + 2 * L.size > budget:
            raise RefinementBudgetExceeded(f"more than {budget} cells needed for this gauge")
        L, R = np.concatenate([L, mid]), np.concatenate([mid, R])
    lo_all = np.concatenate(done_lo)
    hi_all = np.concatenate(done_hi)
    tag_all = np.concatenate(done_tag)
    order = np.argsort(lo_all, kind="stable")
    a_s, b_s, t_s = lo_all[order], hi_all[order], tag_all[order]
    n = a_s.size
    # Each shared endpoint goes to the right-hand cell unless only the
    # left-hand cell is tagged there; if both are, both keep it.
    cells = []
    for i in range(n):
        if i == 0:
            c_lo = closed_lo
        else:
            c_lo = not (t_s[i - 1] == a_s[i] and t_s[i] != a_s[i])
        if i == n - 1:
            c_hi = closed_hi
        else:
            c_hi = t_s[i] == b_s[i]
        cells.append(Interval(float(a_s[i]), float(b_s[i]), bool(c_lo), bool(c_hi)))
    return cells, [float(x) for x in t_s]


def _value_at_infinity(f, f_inf):
    if f_inf is not None:
        return float(f_inf)
    val = getattr(f, "at_infinity", None)
    if val is None:
        raise ValueError("a tag at +inf needs the value f(+inf); pass f_inf")
    return float(val)


def riemann_sum(f, P: TaggedPartition, nu, f_inf: float | None = None) -> float:
    """Sum of f(tag) * nu(cell) over the partition.

    Uses the convention 0 * (+-inf) = 0 for tail cells of infinite measure.
    Points shared by two cells must carry no atom of ``nu``.
    """
    atoms = getattr(nu, "atom_locations", ())
    for x in P.shared_points():
        if x in atoms:
            raise ValueError(f"cells overlap at {x}, which carries an atom")
    terms = []
    finite = np.isfinite(P.tags)
    fvals = np.empty(len(P))
    if np.any(finite):
        fvals[finite] = np.asarray(f(P.tags[finite]), dtype=float).reshape(-1)
    if np.any(~finite):
        fvals[~finite] = _value_at_infinity(f, f_inf)
    for cell, fv in zip(P.cells, fvals):
        mass = nu.measure_of(cell)
        if fv == 0.0:
            terms.append(0.0)
            continue
        term = fv * mass
        if not math.isfinite(term):
            raise NonFiniteSum(f"term f={fv} times measure {mass} on {cell} is not finite")
        terms.append(term)
    return math.fsum(terms)
