"""Adaptive gauge (Henstock-Kurzweil) integration against a scalar measure.

The integral is computed as a limit of Riemann sums over a hierarchy of
tagged partitions:

* each bounded part of the set is cut into segments at the breakpoints of the
  density, of ``f``, at atoms and at exempt points; atoms become singleton
  cells tagged at themselves;
* each segment is the root of a dyadic tree of leaves. A leaf stands for the
  tagged partition of its two children into Lobatto sub-cells: the tags are
  the rule's nodes and each sub-cell carries mass
  weight * density(node) * width / 2, so sub-cell boundaries interlace with
  the nodes and the leaf term is a genuine Riemann sum. Lobatto tags sit on
  leaf ends and midpoints, so a parent and its children never share a
  sub-cell boundary and a hidden jump cannot go unnoticed;
* a leaf's discrepancy is (children sum) - (own sum). A tree node is
  accepted when the absolute discrepancies of its leaves add up to at most
  its pro-rata share of the tolerance; everything under an accepted node
  stops refining. Budget moves from smooth leaves to rough ones, but signs
  are never allowed to cancel;
* a segment end where discrepancies stop shrinking switches to an endpoint
  tagged cell [p, p + c]; c is halved only after the freshly exposed shell
  (p + c/2, p + c] is resolved, and the end is accepted once the change of
  the total caused by halving stays within its budget twice in a row. This
  is what makes conditionally convergent integrals such as chirps work.

One eighth of the tolerance is spread over the segments in proportion to
width, three eighths are shared by the endpoint-tagged ends, so the
reported error estimate is at most tol / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from ._backend import kernels
from .domain import INF, Interval, MeasurableSet, TaggedPartition, _as_set
from .errors import NoConvergence, NonFiniteSum, TailNotControlled
from .measures import ScalarMeasure
from .quadrature import gauss_lobatto

DEFAULT_ORDER = 21
MIN_DEPTH = 3
MAX_DEPTH = 60
INTERIOR_SHARE = 1.0 / 8.0
EDGE_SHARE = 3.0 / 8.0
EVAL_CHUNK = 1 << 20


@dataclass(frozen=True)
class HKResult:
    """Value of an integral with the last two-level discrepancy as error estimate."""

    value: float
    error_estimate: float
    levels_used: int
    cells: int = 0
    partition: TaggedPartition | None = field(default=None, compare=False, repr=False)


@dataclass
class _Edge:
    seg: int
    side: int  # 0 left end, 1 right end
    point: float
    mode: str = "gl"
    hist: list = field(default_factory=list)
    last_depth: int = -1
    fp: float = math.nan
    depth: int = 0
    value: float = 0.0
    shell: int | None = None  # index of the shell node at self.depth
    steps: list = field(default_factory=list)
    done: bool = False


def _point_values(f, pts, exempt) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if pts.size == 0:
        return np.zeros(0)
    vals = np.asarray(f(pts), dtype=float).reshape(pts.shape)
    if exempt:
        vals = np.where(np.isin(pts, list(exempt)), 0.0, vals)
    return vals


class _Integrator:
    """One adaptive run over a list of disjoint pieces sharing a tolerance."""

    def __init__(self, f, pieces: Sequence[MeasurableSet], m: ScalarMeasure, tol: float, *,
                 exempt: Iterable[float] = (), order: int = DEFAULT_ORDER,
                 min_depth: int = MIN_DEPTH, max_levels: int = 400,
                 max_cells: int = 10**7, econfirm: int = 2):
        if not tol > 0:
            raise ValueError("tolerance must be positive")
        self.f = f
        self.m = m
        self.tol = float(tol)
        self.exempt = tuple(sorted({float(x) for x in exempt}))
        self.order = int(order)
        self.min_depth = int(min_depth)
        self.max_levels = int(max_levels)
        self.max_cells = int(max_cells)
        self.econfirm = int(econfirm)
        if self.order % 2 == 0 or self.order < 3:
            raise ValueError("the tag rule needs an odd number of nodes >= 3")
        self.nodes, self.weights = gauss_lobatto(self.order)
        self._segments(pieces)

    # setup
    def _segments(self, pieces):
        cuts = set(self.m.breakpoints) | set(self.m.atom_locations) | set(self.exempt)
        cuts |= {float(x) for x in getattr(self.f, "breakpoints", ()) or ()}
        cuts = sorted(x for x in cuts if math.isfinite(x))
        seg_lo, seg_hi, seg_piece, seg_owner = [], [], [], []
        open_lo, open_hi = [], []
        atom_terms: list[list[float]] = [[] for _ in pieces]
        atom_locs = self.m.atom_locations
        self.atom_cells = []
        for k, A in enumerate(pieces):
            for part in A.parts:
                if part.hi == INF:
                    raise ValueError("bounded pieces required; use hk_integrate_unbounded")
                for x, w in self.m.atoms:
                    if part.contains(x):
                        val = float(_point_values(self.f, [x], self.exempt)[0])
                        if val != 0.0:
                            term = val * w
                            if not math.isfinite(term):
                                raise NonFiniteSum(f"f({x}) = {val} at an atom of weight {w}")
                            atom_terms[k].append(term)
                        self.atom_cells.append((x, w, val))
                if not part.hi > part.lo:
                    continue
                pts = [part.lo] + [c for c in cuts if part.lo < c < part.hi] + [part.hi]
                for a, b in zip(pts, pts[1:]):
                    mid = a + (b - a) / 2
                    pk = int(self.m.piece_index(np.array([mid]))[0]) if self.m.pieces else -1
                    if pk < 0:
                        continue
                    seg_lo.append(a)
                    seg_hi.append(b)
                    seg_piece.append(pk)
                    seg_owner.append(k)
                    open_lo.append(a in atom_locs or (a == part.lo and not part.closed_lo))
                    open_hi.append(b in atom_locs or (b == part.hi and not part.closed_hi))
        self.n_pieces = len(pieces)
        self.seg_lo = np.array(seg_lo, dtype=float)
        self.seg_hi = np.array(seg_hi, dtype=float)
        self.seg_w = self.seg_hi - self.seg_lo
        self.seg_piece = np.array(seg_piece, dtype=np.int64)
        self.seg_owner = np.array(seg_owner, dtype=np.int64)
        self.seg_open_lo = open_lo
        self.seg_open_hi = open_hi
        self.atom_terms = atom_terms
        total_w = float(self.seg_w.sum())
        self.share = INTERIOR_SHARE * self.tol / total_w if total_w > 0 else 0.0

    # evaluation
    def _g(self, x: np.ndarray, seg: np.ndarray) -> np.ndarray:
        """f * density at points x (rows belong to the segments in seg)."""
        fx = np.asarray(self.f(x.ravel()), dtype=float).reshape(x.shape)
        if not np.all(np.isfinite(fx)):
            bad = x[~np.isfinite(fx)]
            raise NonFiniteSum(f"f is not finite at {bad.ravel()[:3].tolist()}")
        pieces = self.seg_piece[seg]
        uniq = np.unique(pieces)
        if uniq.size == 1:
            p = self.m.pieces[int(uniq[0])]
            if p.is_polynomial and p.poly.degree() <= 0:
                return fx * float(p.poly.coef[0])
            return fx * p(x)
        out = np.empty_like(fx)
        for k in uniq:
            sel = pieces == k
            out[sel] = fx[sel] * self.m.pieces[int(k)](x[sel])
        return out

    def _bounds(self, seg, depth, idx):
        """Left end, midpoint and right end of leaves, exact at segment ends."""
        w = self.seg_w[seg]
        lo = self.seg_lo[seg]
        fi = idx.astype(float)
        L = lo + np.ldexp(w * fi, -depth)
        M = lo + np.ldexp(w * (2 * fi + 1), -depth - 1)
        last = idx == (np.left_shift(np.int64(1), depth.astype(np.int64)) - 1)
        R = np.where(last, self.seg_hi[seg], lo + np.ldexp(w * (fi + 1), -depth))
        return L, M, R

    def _rule(self, seg, a, b):
        """Riemann sum over the Lobatto-tagged sub-cells of each [a_i, b_i].

        Tags at the ends of a segment are nudged inside it, so a jump at a
        breakpoint is seen from the correct side.
        """
        total = np.empty(seg.size)
        step = max(1, EVAL_CHUNK // self.order)
        for s in range(0, seg.size, step):
            sl = slice(s, s + step)
            aa, bb, ss = a[sl], b[sl], seg[sl]
            half = (bb - aa) / 2
            x = (aa + half)[:, None] + half[:, None] * self.nodes[None, :]
            x[:, 0] = aa
            x[:, -1] = bb
            eta_a = np.maximum(1e-12 * (bb - aa), 8 * np.spacing(np.abs(aa)))
            eta_b = np.maximum(1e-12 * (bb - aa), 8 * np.spacing(np.abs(bb)))
            at_lo = aa == self.seg_lo[ss]
            at_hi = bb == self.seg_hi[ss]
            x[at_lo, 0] = aa[at_lo] + eta_a[at_lo]
            x[at_hi, -1] = bb[at_hi] - eta_b[at_hi]
            total[sl] = half * (self._g(x, ss) @ self.weights)
        return total

    def _evaluate(self, seg, depth, idx, v, cl, cr, skip):
        need_c = np.isnan(cl) & ~skip
        need_v = np.isnan(v) & ~skip
        if np.any(need_c):
            i = np.nonzero(need_c)[0]
            L, M, R = self._bounds(seg[i], depth[i], idx[i])
            cl[i] = self._rule(seg[i], L, M)
            cr[i] = self._rule(seg[i], M, R)
        if np.any(need_v):
            i = np.nonzero(need_v)[0]
            L, M, R = self._bounds(seg[i], depth[i], idx[i])
            v[i] = self._rule(seg[i], L, R)
        cl[skip & np.isnan(cl)] = 0.0
        cr[skip & np.isnan(cr)] = 0.0
        v[skip & np.isnan(v)] = 0.0

    def _edge_value(self, e: _Edge, v_leaf: float) -> float:
        if math.isfinite(e.fp):
            w = math.ldexp(self.seg_w[e.seg], -e.depth)
            lo, hi = self.seg_lo[e.seg], self.seg_hi[e.seg]
            cell = (lo, lo + w) if e.side == 0 else (hi - w, hi)
            return e.fp * self.m.density_integral(*cell) if e.fp != 0.0 else 0.0
        return v_leaf

    # main loop
    def run(self):
        nseg = self.seg_lo.size
        if nseg == 0:
            self.levels = 0
            empty = np.zeros(0)
            self.leaves = (np.zeros(0, dtype=np.int32), np.zeros(0, dtype=np.int32),
                           np.zeros(0, dtype=np.int64), empty, empty, empty)
            self.edges = []
            return np.array([math.fsum(t) for t in self.atom_terms]), 0.0
        per = 1 << self.min_depth
        seg = np.repeat(np.arange(nseg, dtype=np.int32), per)
        depth = np.full(seg.size, self.min_depth, dtype=np.int32)
        idx = np.tile(np.arange(per, dtype=np.int64), nseg)
        v = np.full(seg.size, np.nan)
        cl = np.full(seg.size, np.nan)
        cr = np.full(seg.size, np.nan)
        self._evaluate(seg, depth, idx, v, cl, cr, np.zeros(seg.size, dtype=bool))
        edges = [_Edge(s, side, float(self.seg_lo[s] if side == 0 else self.seg_hi[s]))
                 for s in range(nseg) for side in (0, 1)]
        levels = 0
        while True:
            levels += 1
            starts = np.searchsorted(seg, np.arange(nseg + 1))
            pos = np.array([starts[e.seg] if e.side == 0 else starts[e.seg + 1] - 1 for e in edges],
                           dtype=np.int64) if edges else np.zeros(0, dtype=np.int64)
            hake = np.array([e.mode == "hake" for e in edges], dtype=bool)
            d = cl + cr - v
            d[pos[hake]] = 0.0
            acc = kernels.accept_marks(seg, depth, idx, np.abs(d), self.seg_w, self.share)
            acc = acc.astype(bool)
            split = np.where(acc, 0, 1).astype(np.int8)
            split[pos[hake]] = 0
            n_hake = int(hake.sum())
            budget = EDGE_SHARE * self.tol / max(1, n_hake)
            seeds = []
            key = None
            for e, i in zip(edges, pos):
                if e.mode == "gl":
                    self._track_gl_edge(e, int(i), d, acc, depth, v)
                    if e.mode == "gl":
                        continue
                    n_hake += 1
                    budget = EDGE_SHARE * self.tol / n_hake
                    split[i] = 0
                if e.shell is not None:
                    if key is None:
                        key = np.left_shift(idx, MAX_DEPTH + 2 - depth)
                    a, b = self._node_range(e.seg, e.depth, e.shell, starts, key)
                    if not np.all(acc[a:b]):
                        continue
                    shell_sum = math.fsum(np.concatenate([cl[a:b], cr[a:b]]).tolist())
                    new_val = self._edge_value(e, v[i])
                    e.steps.append(new_val + shell_sum - e.value)
                    e.value = new_val
                    e.shell = None
                recent = e.steps[-self.econfirm:]
                if len(recent) == self.econfirm and all(abs(h) <= budget for h in recent):
                    e.done = True
                    continue
                e.done = False
                if depth[i] >= MAX_DEPTH:
                    raise NoConvergence(f"segment end {e.point} needs cells below resolution")
                split[i] = 1
                nb = int(depth[i + 1]) if e.side == 0 else int(depth[i - 1])
                e.depth = int(depth[i]) + 1
                seeds.append((e, max(0, nb - e.depth)))
            if not np.any(split):
                break
            if levels >= self.max_levels:
                raise NoConvergence(f"no convergence within {self.max_levels} levels")
            if np.any(depth[split > 0] >= MAX_DEPTH):
                raise NoConvergence("refinement reached floating-point resolution")
            seg, depth, idx, v, cl, cr, _ = kernels.rebuild(split, seg, depth, idx, v, cl, cr)
            if seeds:
                seg, depth, idx, v, cl, cr = self._seed(seeds, seg, depth, idx, v, cl, cr, nseg)
            if seg.size > self.max_cells:
                raise NoConvergence(f"more than {self.max_cells} cells needed")
            skip = np.zeros(seg.size, dtype=bool)
            starts = np.searchsorted(seg, np.arange(nseg + 1))
            for e in edges:
                if e.mode == "hake" and math.isfinite(e.fp):
                    skip[starts[e.seg] if e.side == 0 else starts[e.seg + 1] - 1] = True
            self._evaluate(seg, depth, idx, v, cl, cr, skip)
        self.levels = levels
        self.leaves = (seg, depth, idx, v, cl, cr)
        self.edges = edges
        return self._collect(seg, depth, idx, v, cl, cr, edges, pos, d, nseg)

    def _track_gl_edge(self, e: _Edge, i: int, d, acc, depth, v):
        if depth[i] != e.last_depth:
            e.last_depth = int(depth[i])
            e.hist.append(abs(float(d[i])))
        if acc[i] or len(e.hist) < 3:
            return
        h = e.hist
        if not (h[-1] > 0.5 * h[-2] and h[-2] > 0.5 * h[-3]):
            return
        fp = math.nan
        open_end = self.seg_open_lo[e.seg] if e.side == 0 else self.seg_open_hi[e.seg]
        if not open_end or e.point in self.m.atom_locations:
            # an atom at the end merges with the edge cell, so tagging there is valid
            val = float(_point_values(self.f, [e.point], self.exempt)[0])
            if math.isfinite(val):
                fp = val
        e.mode = "hake"
        e.fp = fp
        e.depth = int(depth[i])
        e.value = self._edge_value(e, float(v[i]))
        e.shell = None

    def _node_range(self, s, dep, node, starts, key):
        a0, b0 = int(starts[s]), int(starts[s + 1])
        shift = MAX_DEPTH + 2 - dep
        k = key[a0:b0]
        return (a0 + int(np.searchsorted(k, node << shift)),
                a0 + int(np.searchsorted(k, (node + 1) << shift)))

    def _seed(self, seeds, seg, depth, idx, v, cl, cr, nseg):
        """Record the new shells and pre-refine them to their neighbour's depth."""
        starts = np.searchsorted(seg, np.arange(nseg + 1))
        split = np.zeros(seg.size, dtype=np.int8)
        for e, extra in seeds:
            edge_pos = starts[e.seg] if e.side == 0 else starts[e.seg + 1] - 1
            shell_pos = edge_pos + 1 if e.side == 0 else edge_pos - 1
            e.shell = int(idx[shell_pos])
            if extra > 0:
                split[shell_pos] = min(extra, 20)
        if np.any(split):
            seg, depth, idx, v, cl, cr, _ = kernels.rebuild(split, seg, depth, idx, v, cl, cr)
        return seg, depth, idx, v, cl, cr

    def _collect(self, seg, depth, idx, v, cl, cr, edges, pos, d, nseg):
        starts = np.searchsorted(seg, np.arange(nseg + 1))
        hake_pos = {}
        for e in edges:
            if e.mode == "hake":
                hake_pos[int(starts[e.seg] if e.side == 0 else starts[e.seg + 1] - 1)] = e
        fine = cl + cr
        interior = np.ones(seg.size, dtype=bool)
        interior[list(hake_pos)] = False
        per_piece: list[list[float]] = [list(t) for t in self.atom_terms]
        owner = self.seg_owner[seg]
        for k in range(self.n_pieces):
            sel = interior & (owner == k)
            per_piece[k].extend(fine[sel].tolist())
        for i, e in hake_pos.items():
            per_piece[int(self.seg_owner[e.seg])].append(e.value)
        values = np.array([math.fsum(t) for t in per_piece])
        dsum = math.fsum((cl + cr - v)[interior].tolist())
        err = abs(dsum + math.fsum(e.steps[-1] for e in hake_pos.values() if e.steps))
        return values, err


def _check_function(f):
    if not callable(f):
        raise TypeError("integrand must be callable")
    return f


def hk_integrate(f: Callable, A, m: ScalarMeasure, tol: float = 1e-9, *,
                 exempt: Iterable[float] = (), order: int = DEFAULT_ORDER,
                 max_levels: int = 400, max_cells: int = 10**7,
                 return_partition: bool = False, **kwargs) -> HKResult:
    """Gauge integral of a vectorized ``f`` over ``A`` against ``m``.

    ``exempt`` lists points where ``f`` is treated as zero (a null set on which
    ``f`` need not be defined). Unbounded sets are delegated to
    ``hk_integrate_unbounded`` without a tail envelope.
    """
    A = _as_set(A)
    if not A.is_bounded:
        return hk_integrate_unbounded(f, A, m, tol, exempt=exempt, order=order, **kwargs)
    run = _Integrator(_check_function(f), [A], m, tol, exempt=exempt, order=order,
                      max_levels=max_levels, max_cells=max_cells, **kwargs)
    values, err = run.run()
    part = materialize_partition(run) if return_partition else None
    return HKResult(float(values[0]), float(err), run.levels, int(run.leaves[0].size), part)


def hk_integrate_pieces(f: Callable, pieces: Sequence, m: ScalarMeasure, tol: float = 1e-9, *,
                        exempt: Iterable[float] = (), order: int = DEFAULT_ORDER,
                        **kwargs) -> tuple[np.ndarray, HKResult]:
    """Integrals over several disjoint bounded sets in one adaptive run.

    The tolerance is shared across the pieces in proportion to their length.
    Returns the per-piece values and an ``HKResult`` for their total.
    """
    pieces = [_as_set(p) for p in pieces]
    run = _Integrator(_check_function(f), pieces, m, tol, exempt=exempt, order=order, **kwargs)
    values, err = run.run()
    total = math.fsum(values.tolist())
    return values, HKResult(total, float(err), run.levels, int(run.leaves[0].size))


def _value_at_infinity(f, f_inf):
    if f_inf is not None:
        return float(f_inf)
    val = getattr(f, "at_infinity", None)
    if val is not None:
        return float(val)
    with np.errstate(all="ignore"):
        val = float(np.asarray(f(np.array([INF])), dtype=float).reshape(-1)[0])
    if not math.isfinite(val):
        raise ValueError("f(+inf) is undefined; pass f_inf or set f.at_infinity")
    return val


def _tail_term(fv: float, mass: float) -> float:
    if fv == 0.0 or mass == 0.0:
        return 0.0
    term = fv * mass
    if not math.isfinite(term):
        raise NonFiniteSum(f"tail cell term f(+inf)={fv} times measure {mass} is not finite")
    return term


def hk_integrate_unbounded(f: Callable, A, m: ScalarMeasure, tol: float = 1e-9,
                           envelope: Callable[[float], float] | None = None, *,
                           f_inf: float | None = None, start: float | None = None,
                           max_doublings: int = 80, exempt: Iterable[float] = (),
                           order: int = DEFAULT_ORDER, **kwargs) -> HKResult:
    """Gauge integral over a set reaching +inf.

    The finite part [lo, b] is integrated adaptively and the last cell
    (b, +inf] is tagged at +inf, contributing f(+inf) * m((b, +inf]) with the
    convention 0 * inf = 0. With ``envelope``, a bound on |integral over
    (b, +inf]| as a function of b, b is doubled until the bound is below tol/4.
    Without it, b is doubled until two consecutive increments are below tol/4.
    """
    A = _as_set(A)
    if A.is_bounded:
        return hk_integrate(f, A, m, tol, exempt=exempt, order=order, **kwargs)
    lo = A.parts[0].lo
    finite_ends = [x for x in A.endpoints() if math.isfinite(x)]
    finite_ends += [x for x in m.breakpoints + list(m.atom_locations)]
    b = start if start is not None else max([lo + 1.0] + [2.0 * abs(x) + 1.0 for x in finite_ends])
    fv = _value_at_infinity(f, f_inf)
    point_inf = m.tail_mass if A.contains(INF) else 0.0

    def tail_cell_term(b):
        tail = A & MeasurableSet.interval(b, INF, False, False)
        return _tail_term(fv, m.measure_of(tail) if not tail.is_empty else 0.0) + _tail_term(fv, point_inf)

    if envelope is not None:
        for _ in range(max_doublings):
            if envelope(b) <= tol / 4:
                break
            b *= 2.0
        else:
            raise TailNotControlled(f"envelope did not drop below {tol / 4} before b={b}")
        head = hk_integrate(f, A & MeasurableSet.interval(lo, b), m, 0.75 * tol,
                            exempt=exempt, order=order, **kwargs)
        tail = tail_cell_term(b)
        return HKResult(head.value + tail, head.error_estimate + float(envelope(b)),
                        head.levels_used, head.cells)
    head = hk_integrate(f, A & MeasurableSet.interval(lo, b), m, tol / 2,
                        exempt=exempt, order=order, **kwargs)
    parts = [head.value]
    err = head.error_estimate
    levels = head.levels_used
    cells = head.cells
    quiet = 0
    for k in range(max_doublings):
        piece = A & MeasurableSet.interval(b, 2.0 * b, False, True)
        inc = hk_integrate(f, piece, m, tol / 2 ** (k + 3), exempt=exempt, order=order, **kwargs)
        parts.append(inc.value)
        err += inc.error_estimate
        levels = max(levels, inc.levels_used)
        cells += inc.cells
        b *= 2.0
        quiet = quiet + 1 if abs(inc.value) <= tol / 4 else 0
        if quiet >= 2:
            break
    else:
        raise TailNotControlled("integral over [b, 2b] did not settle while doubling b")
    return HKResult(math.fsum(parts) + tail_cell_term(b), err, levels, cells)


def materialize_partition(run: _Integrator) -> TaggedPartition:
    """Explicit tagged partition whose Riemann sum is the integrator's value.

    Every child of an interior leaf is split into sub-cells around the rule's
    nodes with boundaries placed where the cumulative mass matches the rule's
    partial sums. Endpoint-tagged ends and atoms become their own cells.
    Intended for checks on small problems.
    """
    seg, depth, idx = run.leaves[0], run.leaves[1], run.leaves[2]
    if seg.size > 20000:
        raise ValueError("partition too large to materialize")
    m = run.m
    atoms = dict(m.atoms)
    cells: list[Interval] = []
    tags: list[float] = []
    hake = {(e.seg, e.side): e for e in run.edges if e.mode == "hake"}
    merged_atoms = set()
    nseg = run.seg_lo.size
    starts = np.searchsorted(seg, np.arange(nseg + 1))
    for s in range(nseg):
        a0, b0 = int(starts[s]), int(starts[s + 1])
        lo_s, hi_s = float(run.seg_lo[s]), float(run.seg_hi[s])
        for i in range(a0, b0):
            L = lo_s + math.ldexp(run.seg_w[s] * float(idx[i]), -int(depth[i]))
            w = math.ldexp(float(run.seg_w[s]), -int(depth[i]))
            R = L + w
            if i == b0 - 1:
                R = hi_s
            side = 0 if i == a0 else (1 if i == b0 - 1 else None)
            e = hake.get((s, side)) if side is not None else None
            if e is not None and math.isfinite(e.fp):
                closed_lo = side != 0 or not run.seg_open_lo[s] or e.point in atoms
                closed_hi = side != 1 or not run.seg_open_hi[s] or e.point in atoms
                if e.point in atoms:
                    merged_atoms.add(e.point)
                cells.append(Interval(L, R, closed_lo, closed_hi))
                tags.append(e.point)
                continue
            for c_lo, c_hi in ((L, L + w / 2), (L + w / 2, R)):
                bounds, nodes = _mass_matched_cells(run, s, c_lo, c_hi)
                for j, x in enumerate(nodes):
                    lo_j, hi_j = bounds[j], bounds[j + 1]
                    cl = not (lo_j == lo_s and run.seg_open_lo[s])
                    ch = not (hi_j == hi_s and run.seg_open_hi[s])
                    if j > 0:
                        cl = True
                    if j < len(nodes) - 1 or hi_j < hi_s:
                        ch = False
                    # a tag on the right end keeps it; the neighbour shares the point
                    if x == hi_j:
                        ch = True
                    cells.append(Interval(lo_j, hi_j, cl, ch))
                    tags.append(float(x))
    for x, w, _ in run.atom_cells:
        if x not in merged_atoms:
            cells.append(Interval(x, x))
            tags.append(x)
    order = sorted(range(len(cells)), key=lambda k: (cells[k].lo, cells[k].hi))
    return TaggedPartition(tuple(cells[k] for k in order), np.array([tags[k] for k in order]))


def _mass_matched_cells(run: _Integrator, s: int, lo: float, hi: float):
    half = (hi - lo) / 2
    nodes = lo + half + half * run.nodes
    nodes[0], nodes[-1] = lo, hi
    # same inward nudge at segment ends as the integrator
    eta = max(1e-12 * (hi - lo), 8 * np.spacing(abs(lo)))
    if lo == run.seg_lo[s]:
        nodes[0] = lo + eta
    eta = max(1e-12 * (hi - lo), 8 * np.spacing(abs(hi)))
    if hi == run.seg_hi[s]:
        nodes[-1] = hi - eta
    piece = run.m.pieces[int(run.seg_piece[s])]
    rho = piece(nodes)
    lam = run.weights * rho * half
    cum = np.cumsum(lam)
    bounds = [lo]
    for j in range(len(nodes) - 1):
        target = float(cum[j])

        def gap(y, target=target):
            return piece.integral(lo, y) - target

        bounds.append(brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15))
    bounds.append(hi)
    return bounds, nodes
