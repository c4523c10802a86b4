"""Convergence experiments for sequences of integrands.

Each run integrates f_n and the limit f over a finite family of sets and
records, per n, the largest gap between the two. A run passes when the last
gap is below the tolerance and no gap in the second half of the sequence
exceeds twice the tolerance.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._parallel import map_ordered
from .convex import hausdorff
from .domain import MeasurableSet, _as_set
from .errors import GeneratorViolatesDomination
from .hk import hk_integrate
from .measures import ScalarMeasure
from .setvalued import BallDensity, SetValuedMeasure, sv_kl_henstock_integral, sv_variation_integral
from .vector import (DirectionGrid, VectorMeasure, apply_functional, dyadic_family, indefinite_integral,
                     vector_norm)

COLUMNS = ("theorem_id", "seed", "n", "discrepancy", "tolerance", "verdict")
AUX_COLUMN = "moreover"


@dataclass
class ConvergenceReport:
    """Per-n discrepancies of one experiment and the resulting verdict.

    ``aux`` holds the integral of |f_n - f| against |x mu| (maximized over
    the grid) for the vector runs; ``runtime`` is informational and never
    written out.
    """

    theorem_id: str
    seed: int
    n_values: list[int]
    discrepancies: list[float]
    tolerance: float
    verdict: str = ""
    aux: list[float] | None = None
    runtime: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not self.verdict:
            self.verdict = verdict(self.discrepancies, self.tolerance)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def verdict(discrepancies: Sequence[float], tolerance: float) -> str:
    """'pass' iff the last value is below tol and the last half stays below 2 tol."""
    d = list(discrepancies)
    if not d:
        return "fail"
    tail = d[len(d) // 2:]
    return "pass" if d[-1] < tolerance and max(tail) < 2 * tolerance else "fail"


def _rows(report: ConvergenceReport) -> list[dict]:
    rows = []
    for k, (n, disc) in enumerate(zip(report.n_values, report.discrepancies)):
        row = {"theorem_id": report.theorem_id, "seed": report.seed, "n": int(n),
               "discrepancy": float(disc), "tolerance": float(report.tolerance), "verdict": report.verdict}
        if report.aux is not None:
            row[AUX_COLUMN] = float(report.aux[k])
        rows.append(row)
    return rows


def report_text(report: ConvergenceReport, fmt: str = "csv") -> str:
    """The exact bytes ``emit_report`` writes, as a string."""
    cols = list(COLUMNS) + ([AUX_COLUMN] if report.aux is not None else [])
    rows = _rows(report)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
        return buf.getvalue()
    if fmt == "json":
        doc = {"theorem_id": report.theorem_id, "seed": report.seed, "tolerance": report.tolerance,
               "verdict": report.verdict, "columns": cols, "rows": rows}
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError("format must be 'csv' or 'json'")


def emit_report(report: ConvergenceReport, fmt: str, path) -> None:
    """Write the report as CSV or JSON; IO errors propagate unchanged."""
    text = report_text(report, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_report(path, fmt: str | None = None) -> ConvergenceReport:
    """Inverse of ``emit_report``."""
    path = str(path)
    fmt = fmt or ("json" if path.endswith(".json") else "csv")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "json":
        doc = json.loads(text)
        rows = doc["rows"]
        aux = [r[AUX_COLUMN] for r in rows] if AUX_COLUMN in doc["columns"] else None
        return ConvergenceReport(doc["theorem_id"], doc["seed"], [r["n"] for r in rows],
                                 [r["discrepancy"] for r in rows], doc["tolerance"], doc["verdict"], aux)
    lines = list(csv.reader(io.StringIO(text)))
    header, body = lines[0], lines[1:]
    if not body:
        raise ValueError("header-only report carries no metadata")
    col = {c: i for i, c in enumerate(header)}
    first = body[0]
    aux = [float(r[col[AUX_COLUMN]]) for r in body] if AUX_COLUMN in col else None
    return ConvergenceReport(first[col["theorem_id"]], int(first[col["seed"]]),
                             [int(r[col["n"]]) for r in body], [float(r[col["discrepancy"]]) for r in body],
                             float(first[col["tolerance"]]), first[col["verdict"]], aux)


# set families

def default_family(lo: float, hi: float, seed: int = 0, n_dyadic: int = 50, n_random: int = 50,
                   max_depth: int = 6) -> list[MeasurableSet]:
    """Dyadic subintervals plus seeded random unions of up to three intervals.

    Every dyadic interval down to depth 4 is kept (31 sets); the remaining
    dyadic slots are drawn from depths 5 to ``max_depth``.
    """
    rng = np.random.default_rng(seed)
    dyadic = dyadic_family(lo, hi, max_depth)
    base = [S for S in dyadic[:31]][:n_dyadic]
    rest = dyadic[31:]
    if n_dyadic > len(base) and rest:
        pick = rng.choice(len(rest), size=min(n_dyadic - len(base), len(rest)), replace=False)
        base += [rest[i] for i in sorted(pick)]
    fam = list(base)
    for _ in range(n_random):
        k = int(rng.integers(1, 4))
        pts = np.sort(rng.uniform(lo, hi, size=2 * k))
        S = MeasurableSet.empty()
        for a, b in zip(pts[::2], pts[1::2]):
            S = S | MeasurableSet.interval(float(a), float(b), bool(rng.integers(2)), bool(rng.integers(2)))
        fam.append(S)
    return fam


def _with_breaks(fn: Callable, pts) -> Callable:
    def f(t):
        return fn(np.asarray(t, dtype=float))

    f.breakpoints = sorted(set(pts) | set(getattr(fn, "breakpoints", ()) or ()))
    return f


def _samples(T: MeasurableSet, null: MeasurableSet, n: int = 2049) -> np.ndarray:
    pts = []
    for part in T.parts:
        hi = part.hi if math.isfinite(part.hi) else part.lo + 100.0
        pts.append(np.linspace(part.lo, hi, n))
    t = np.concatenate(pts) if pts else np.zeros(0)
    t = t[T.contains(t)]
    if not null.is_empty:
        t = t[~null.contains(t)]
    return t


# vector experiments

@dataclass
class DCTConfig:
    """Inputs of a dominated convergence run.

    ``sequence(n)`` returns f_n; ``dominating`` is g with |f_n| <= |g| off
    the declared null sets of ``mu``. ``tolerance`` judges the verdict and
    ``integration_tol`` drives every scalar integral.
    """

    mu: VectorMeasure
    sequence: Callable[[int], Callable]
    limit: Callable
    dominating: Callable
    domain: MeasurableSet
    n_values: Sequence[int]
    sets: Sequence[MeasurableSet] | None = None
    grid: DirectionGrid | None = None
    tolerance: float = 1e-3
    integration_tol: float = 1e-7
    seed: int = 0
    theorem_id: str = "dct"


def _check_domination(seq, g, n_values, T, null, positive=False):
    t = _samples(T, null)
    gv = np.abs(np.asarray(g(t), dtype=float))
    for n in n_values:
        fv = np.asarray(seq(n)(t), dtype=float)
        excess = np.abs(fv) - gv
        if np.any(excess > 1e-12 * np.maximum(1.0, gv)):
            k = int(np.argmax(excess))
            raise GeneratorViolatesDomination(f"|f_{n}({t[k]})| = {abs(fv[k])} exceeds g = {gv[k]}")
        if positive and np.any(fv < 0):
            raise GeneratorViolatesDomination(f"f_{n} takes negative values")


def _null_points(mu: VectorMeasure) -> tuple[float, ...]:
    return tuple(p.lo for N in mu.null_sets for p in N.parts if p.is_point)


def run_dct(config: DCTConfig) -> ConvergenceReport:
    """Uniform-in-E convergence of the vector integrals of f_n to that of f."""
    start = time.perf_counter()
    mu = config.mu
    T = _as_set(config.domain)
    null = mu.null_union()
    _check_domination(config.sequence, config.dominating, config.n_values, T, null)
    grid = config.grid or mu.default_grid()
    lo, hi = T.bounds
    sets = [(_as_set(S) & T) for S in (config.sets if config.sets is not None else default_family(lo, hi, config.seed))]
    tol = config.integration_tol
    exempt = _null_points(mu)
    ref = indefinite_integral(config.limit, mu, sets, grid, tol, exempt=exempt)
    var_measures = [apply_functional(mu, u).total_variation() for u in grid.directions]
    discs, aux = [], []
    for n in config.n_values:
        fn = config.sequence(n)
        cur = indefinite_integral(fn, mu, sets, grid, tol, exempt=exempt)
        gaps = [float(vector_norm(cur[S].x - ref[S].x, mu.norm)) for S in sets]
        discs.append(max(gaps))
        diff = _with_breaks(lambda t, fn=fn: np.abs(fn(t) - config.limit(t)),
                            getattr(config.limit, "breakpoints", ()) or ())

        def one(m, diff=diff):
            return hk_integrate(diff, T, m, tol, exempt=exempt).value

        aux.append(float(max(map_ordered(one, var_measures))))
    return ConvergenceReport(config.theorem_id, config.seed, [int(n) for n in config.n_values], discs,
                             config.tolerance, aux=aux, runtime=time.perf_counter() - start)


def run_bct(config: DCTConfig, bound: float | None = None) -> ConvergenceReport:
    """Bounded convergence: ``run_dct`` with the constant bound K as g."""
    if bound is not None:
        K = float(bound)
        config = DCTConfig(**{**config.__dict__, "dominating": lambda t: np.full(np.shape(t), K)})
    if config.theorem_id == "dct":
        config.theorem_id = "bct"
    return run_dct(config)


# set-valued experiments

@dataclass
class SVConfig:
    """Inputs of a set-valued convergence run.

    ``ui_table`` lists (eps, delta) pairs: every sampled set A with
    base(A) < delta must satisfy integral_A |f_n| d|M| < eps for all n.
    """

    M: SetValuedMeasure
    sequence: Callable[[int], Callable]
    limit: Callable
    domain: MeasurableSet
    n_values: Sequence[int]
    dominating: Callable | None = None
    ui_table: Sequence[tuple[float, float]] = ()
    grid: DirectionGrid | None = None
    tolerance: float = 1e-3
    integration_tol: float = 1e-7
    seed: int = 0
    theorem_id: str = "vitali-sv"


def _check_uniform_integrability(config: SVConfig, T: MeasurableSet, positions: int = 16):
    lo, hi = T.bounds
    base = config.M.base
    for eps, delta in config.ui_table:
        for k in range(positions):
            a = lo + (hi - lo) * k / positions
            # widest interval at a whose base measure stays below delta
            b = a
            step = (hi - lo) / 2
            while step > (hi - lo) * 1e-9:
                if b + step <= hi and base.measure_of(MeasurableSet.interval(a, b + step)) < delta:
                    b += step
                step /= 2
            if not b > a:
                continue
            A = MeasurableSet.interval(a, b) & T
            for n in config.n_values:
                val = sv_variation_integral(config.M, A, config.integration_tol, f=config.sequence(n))
                if not val < eps:
                    raise GeneratorViolatesDomination(
                        f"uniform integrability fails: f_{n} has mass {val} on {A} (base < {delta}, eps {eps})")


def _run_sv(config: SVConfig) -> ConvergenceReport:
    start = time.perf_counter()
    T = _as_set(config.domain)
    grid = config.grid or config.M.default_grid()
    tol = config.integration_tol
    ref = sv_kl_henstock_integral(config.limit, T, config.M, grid, tol)
    discs = []
    for n in config.n_values:
        W = sv_kl_henstock_integral(config.sequence(n), T, config.M, grid, tol)
        discs.append(hausdorff(W, ref))
    return ConvergenceReport(config.theorem_id, config.seed, [int(n) for n in config.n_values], discs,
                             config.tolerance, runtime=time.perf_counter() - start)


def run_vitali_sv(config: SVConfig) -> ConvergenceReport:
    """Set-valued Vitali run: uniform integrability is checked first."""
    T = _as_set(config.domain)
    _check_nonnegative_seq(config, T)
    _check_uniform_integrability(config, T)
    return _run_sv(config)


def run_dct_sv(config: SVConfig) -> ConvergenceReport:
    """Set-valued dominated convergence: |f_n| <= g, f_n >= 0, g |M|-integrable."""
    T = _as_set(config.domain)
    if config.dominating is None:
        raise GeneratorViolatesDomination("a dominating function is required")
    _check_domination(config.sequence, config.dominating, config.n_values, T, MeasurableSet.empty(), positive=True)
    total = sv_variation_integral(config.M, T, config.integration_tol, f=config.dominating)
    if not math.isfinite(total):
        raise GeneratorViolatesDomination("the dominating function is not |M|-integrable")
    if config.theorem_id == "vitali-sv":
        config.theorem_id = "dct-sv"
    return _run_sv(config)


def _check_nonnegative_seq(config: SVConfig, T: MeasurableSet):
    t = _samples(T, MeasurableSet.empty())
    for n in config.n_values:
        if np.any(np.asarray(config.sequence(n)(t), dtype=float) < 0):
            raise GeneratorViolatesDomination(f"f_{n} takes negative values")


# documented instances

LONG_N = (10, 50, 100, 250, 500, 1000)
BCT_N = (100, 200, 400, 600, 800, 1000)


def dct_instance(seed: int = 0, n_values=LONG_N, tolerance: float = 1e-3) -> DCTConfig:
    """f_n = t + sin(n t)/n on [0, 1] against (Leb, 2t Leb), g = 2."""
    mu = VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1), ScalarMeasure.polynomial([0.0, 2.0], 0, 1)))
    return DCTConfig(mu, lambda n: (lambda t: t + np.sin(n * t) / n), lambda t: np.asarray(t, dtype=float),
                     lambda t: np.full(np.shape(t), 2.0), MeasurableSet.interval(0, 1), n_values,
                     tolerance=tolerance, seed=seed, theorem_id="dct")


def bct_instance(seed: int = 0, n_values=BCT_N, tolerance: float = 1e-3) -> DCTConfig:
    """f_n = t^n on [0, 1] against (Leb, Leb)/2, K = 1; the limit is 0 off the null point 1."""
    half = ScalarMeasure.polynomial([0.5], 0, 1)
    mu = VectorMeasure((half, half), null_sets=(MeasurableSet.point(1.0),))
    return DCTConfig(mu, lambda n: (lambda t: np.asarray(t, dtype=float) ** n), lambda t: np.zeros(np.shape(t)),
                     lambda t: np.ones(np.shape(t)), MeasurableSet.interval(0, 1), n_values,
                     tolerance=tolerance, seed=seed, theorem_id="bct")


def nonconvergent_instance(seed: int = 0, tolerance: float = 1e-3) -> DCTConfig:
    """f_n = (-1)^n with candidate limit 1; must fail."""
    mu = VectorMeasure((ScalarMeasure.polynomial([1.0], 0, 1), ScalarMeasure.polynomial([0.0, 2.0], 0, 1)))
    return DCTConfig(mu, lambda n: (lambda t: np.full(np.shape(t), float((-1) ** n))),
                     lambda t: np.ones(np.shape(t)), lambda t: np.ones(np.shape(t)), MeasurableSet.interval(0, 1),
                     (101, 200, 401, 600, 801, 1000), tolerance=tolerance, seed=seed, theorem_id="bct")


def vitali_instance(seed: int = 0, n_values=BCT_N, tolerance: float = 1e-3) -> SVConfig:
    """f_n = t + 1/n against the ball of radius 1/2 over Lebesgue on [0, 1]."""
    M = SetValuedMeasure(BallDensity([0.0, 0.0], 0.5), ScalarMeasure.polynomial([1.0], 0, 1))
    return SVConfig(M, lambda n: (lambda t: np.asarray(t, dtype=float) + 1.0 / n),
                    lambda t: np.asarray(t, dtype=float), MeasurableSet.interval(0, 1), n_values,
                    ui_table=((0.1, 0.1), (0.01, 0.01)), tolerance=tolerance, seed=seed, theorem_id="vitali-sv")


def dct_sv_instance(seed: int = 0, n_values=BCT_N, tolerance: float = 1e-3, c: float = 1.0) -> SVConfig:
    """f_n = c min(n t, 1) against the unit ball over Lebesgue on [0, 1], g = c."""
    M = SetValuedMeasure(BallDensity([0.0, 0.0], 1.0), ScalarMeasure.polynomial([1.0], 0, 1))

    def seq(n):
        return _with_breaks(lambda t: c * np.minimum(n * t, 1.0), [1.0 / n])

    return SVConfig(M, seq, lambda t: np.full(np.shape(t), c), MeasurableSet.interval(0, 1), n_values,
                    dominating=lambda t: np.full(np.shape(t), c), tolerance=tolerance, seed=seed,
                    theorem_id="dct-sv")


RUNNERS = {"dct": run_dct, "bct": run_bct, "vitali-sv": run_vitali_sv, "dct-sv": run_dct_sv}
INSTANCES = {"dct": dct_instance, "bct": bct_instance, "vitali-sv": vitali_instance, "dct-sv": dct_sv_instance}

__all__ = [
    "COLUMNS", "ConvergenceReport", "DCTConfig", "SVConfig", "bct_instance", "dct_instance", "dct_sv_instance",
    "default_family", "emit_report", "nonconvergent_instance", "read_report", "report_text", "run_bct",
    "run_dct", "run_dct_sv", "run_vitali_sv", "verdict", "vitali_instance",
]
