"""Signed scalar measures: piecewise densities plus point masses.

A ``ScalarMeasure`` is a density given piece by piece (polynomial or any
vectorized callable) together with finitely many atoms and an optional mass
at the point +inf of the compactified half line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .domain import INF, Interval, MeasurableSet, _as_set
from .errors import NonFiniteSum, SignChangeResolutionFailure
from .quadrature import adaptive_integrate, gauss_legendre

QUAD_TOL = 1e-12


@dataclass(frozen=True)
class DensityPiece:
    """Density on [lo, hi]: a polynomial in t, or a vectorized callable."""

    lo: float
    hi: float
    poly: Polynomial | None = None
    func: Callable | None = None

    def __post_init__(self):
        if (self.poly is None) == (self.func is None):
            raise ValueError("a density piece needs exactly one of poly or func")
        if not self.hi > self.lo:
            raise ValueError("density pieces must have positive length")

    @property
    def is_polynomial(self) -> bool:
        return self.poly is not None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.poly is not None:
            return self.poly(t)
        return np.broadcast_to(np.asarray(self.func(t), dtype=float), t.shape)

    def integral(self, a: float, b: float) -> float:
        """Integral of this piece's density over [a, b] (clipped to the piece)."""
        a, b = max(a, self.lo), min(b, self.hi)
        if not b > a:
            return 0.0
        if self.poly is not None:
            if b == INF or a == -INF:
                return _poly_improper(self.poly, a, b)
            n = max(1, (self.poly.degree() + 2) // 2)
            x, w = gauss_legendre(n)
            half = (b - a) / 2
            return float(half * np.dot(w, self.poly(a + half + half * x)))
        if a == -INF:
            raise ValueError("callable densities must be bounded below")
        return adaptive_integrate(self.func, a, b, QUAD_TOL)


def _poly_improper(p: Polynomial, a: float, b: float) -> float:
    coef = np.trim_zeros(np.asarray(p.coef, dtype=float), "b")
    if coef.size == 0:
        return 0.0
    lead = float(coef[-1])
    deg = coef.size - 1
    # A nonzero polynomial integrated over a half line diverges with the sign
    # it takes far out on that side.
    signs = []
    if b == INF:
        signs.append(math.copysign(1.0, lead))
    if a == -INF:
        signs.append(math.copysign(1.0, lead) * (-1.0) ** deg)
    if len(set(signs)) > 1:
        raise NonFiniteSum("density integral of the form inf - inf")
    return signs[0] * INF


class _Signed:
    """Callable density multiplied by a fixed sign."""

    def __init__(self, func, sign: float):
        self.func = func
        self.sign = sign

    def __call__(self, t):
        return self.sign * np.asarray(self.func(t), dtype=float)


class _Combination:
    """Linear combination of piece densities."""

    def __init__(self, terms):
        self.terms = terms

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for c, piece in self.terms:
            out = out + c * piece(t)
        return out


@dataclass(frozen=True)
class ScalarMeasure:
    """Signed measure with a piecewise density, atoms and mass at +inf.

    Pieces must not overlap. ``atoms`` maps locations to weights. ``tail_mass``
    is the mass carried by the point +inf itself (may be +-inf).
    """

    pieces: tuple[DensityPiece, ...] = ()
    atoms: tuple[tuple[float, float], ...] = ()
    tail_mass: float = 0.0
    _starts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=lambda p: p.lo))
        for a, b in zip(pieces, pieces[1:]):
            if b.lo < a.hi:
                raise ValueError("density pieces overlap")
        merged: dict[float, float] = {}
        for x, w in self.atoms:
            if not math.isfinite(x):
                raise ValueError("atoms must sit at finite points; use tail_mass for +inf")
            merged[float(x)] = merged.get(float(x), 0.0) + float(w)
        atoms = tuple(sorted((x, w) for x, w in merged.items() if w != 0.0))
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))
        object.__setattr__(self, "_starts", np.array([p.lo for p in pieces], dtype=float))

    # constructors
    @classmethod
    def lebesgue(cls, lo: float = -INF, hi: float = INF) -> "ScalarMeasure":
        return cls((DensityPiece(lo, hi, poly=Polynomial([1.0])),))

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], lo: float, hi: float, atoms=()) -> "ScalarMeasure":
        """Density sum_k coeffs[k] t**k on [lo, hi]."""
        return cls((DensityPiece(lo, hi, poly=Polynomial(np.asarray(coeffs, dtype=float))),), tuple(atoms))

    @classmethod
    def piecewise_polynomial(cls, breaks: Sequence[float], coeffs: Sequence[Sequence[float]], atoms=()):
        """Polynomial coeffs[i] on [breaks[i], breaks[i+1]]."""
        if len(breaks) != len(coeffs) + 1:
            raise ValueError("need one coefficient list per piece")
        pieces = [DensityPiece(breaks[i], breaks[i + 1], poly=Polynomial(np.asarray(c, dtype=float)))
                  for i, c in enumerate(coeffs)]
        return cls(tuple(pieces), tuple(atoms))

    @classmethod
    def from_density(cls, func: Callable, lo: float, hi: float, breakpoints: Iterable[float] = (),
                     atoms=(), tail_mass: float = 0.0) -> "ScalarMeasure":
        """Callable density on [lo, hi], smooth between the given breakpoints."""
        pts = sorted({lo, hi, *[b for b in breakpoints if lo < b < hi]})
        pieces = [DensityPiece(a, b, func=func) for a, b in zip(pts, pts[1:])]
        return cls(tuple(pieces), tuple(atoms), tail_mass)

    @classmethod
    def dirac(cls, x: float, weight: float = 1.0) -> "ScalarMeasure":
        return cls((), ((x, weight),))

    # basic queries
    @property
    def atom_locations(self) -> tuple[float, ...]:
        return tuple(x for x, _ in self.atoms)

    @property
    def breakpoints(self) -> list[float]:
        pts = set()
        for p in self.pieces:
            pts.update(v for v in (p.lo, p.hi) if math.isfinite(v))
        return sorted(pts)

    @property
    def is_polynomial(self) -> bool:
        return all(p.is_polynomial for p in self.pieces)

    def support_hull(self) -> tuple[float, float]:
        """Smallest interval holding all pieces and atoms."""
        lo = [p.lo for p in self.pieces] + [x for x, _ in self.atoms]
        hi = [p.hi for p in self.pieces] + [x for x, _ in self.atoms]
        if not lo:
            raise ValueError("zero measure has no support")
        return min(lo), max(hi)

    def piece_index(self, t) -> np.ndarray:
        """Index of the piece containing each t, or -1 outside all pieces."""
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self._starts, t, side="right") - 1
        his = np.array([p.hi for p in self.pieces] + [-INF])
        inside = (k >= 0) & (t <= his[k])
        return np.where(inside, k, -1)

    def density(self, t) -> np.ndarray:
        """Density value at t (zero outside the pieces)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        if not self.pieces:
            return out
        k = self.piece_index(t)
        for i, p in enumerate(self.pieces):
            sel = k == i
            if np.any(sel):
                out[sel] = p(t[sel])
        return out

    def density_integral(self, a: float, b: float) -> float:
        """Integral of the density alone over [a, b]."""
        if not b > a:
            return 0.0
        vals = [p.integral(a, b) for p in self.pieces if p.hi > a and p.lo < b]
        return _sum_extended(vals)

    def density_integrals(self, L, R) -> np.ndarray:
        """Vectorized ``density_integral`` for many cells."""
        return np.array([self.density_integral(float(a), float(b)) for a, b in zip(L, R)])

    def atom_mass(self, part: Interval) -> float:
        return math.fsum(w for x, w in self.atoms if part.contains(x))

    def measure_of(self, A) -> float:
        """Measure of a set; may be +-inf for unbounded sets."""
        if isinstance(A, Interval):
            A = MeasurableSet([A])
        A = _as_set(A)
        vals = []
        for part in A.parts:
            if part.hi > part.lo:
                vals.append(self.density_integral(part.lo, part.hi))
            vals.append(self.atom_mass(part))
            if part.hi == INF and part.closed_hi and self.tail_mass != 0.0:
                vals.append(self.tail_mass)
        return _sum_extended(vals)

    def is_nonnegative(self, samples: int = 257) -> bool:
        """Checks atoms, tail mass and the density on a sample grid per piece."""
        if any(w < 0 for _, w in self.atoms) or self.tail_mass < 0:
            return False
        for p in self.pieces:
            t = _piece_samples(p, samples)
            if np.any(p(t) < 0):
                return False
        return True

    # transformations
    def scaled(self, c: float) -> "ScalarMeasure":
        return linear_combination([c], [self])

    def __add__(self, other: "ScalarMeasure") -> "ScalarMeasure":
        return linear_combination([1.0, 1.0], [self, other])

    def total_variation(self) -> "ScalarMeasure":
        """The variation measure |m|, splitting pieces at sign changes."""
        pieces = []
        for p in self.pieces:
            for a, b in _sign_intervals(p):
                mid = _interior_point(a, b)
                s = float(np.sign(p(np.array([mid]))[0]))
                if s == 0.0:
                    continue
                if p.is_polynomial:
                    pieces.append(DensityPiece(a, b, poly=s * p.poly))
                else:
                    pieces.append(DensityPiece(a, b, func=_Signed(p.func, s)))
        atoms = tuple((x, abs(w)) for x, w in self.atoms)
        return ScalarMeasure(tuple(pieces), atoms, abs(self.tail_mass))


def _sum_extended(vals) -> float:
    infs = [v for v in vals if math.isinf(v)]
    if any(math.isnan(v) for v in vals):
        raise NonFiniteSum("NaN in measure computation")
    if infs:
        if any(v > 0 for v in infs) and any(v < 0 for v in infs):
            raise NonFiniteSum("measure of the form inf - inf")
        return infs[0]
    return math.fsum(vals)


def _interior_point(a: float, b: float) -> float:
    if a == -INF and b == INF:
        return 0.0
    if b == INF:
        return a + 1.0
    if a == -INF:
        return b - 1.0
    return a + (b - a) / 2


def _piece_samples(p: DensityPiece, n: int) -> np.ndarray:
    a, b = p.lo, p.hi
    if math.isfinite(a) and math.isfinite(b):
        return np.linspace(a, b, n)[1:-1]
    s = np.linspace(0.0, 1.0, n)[1:-1]
    if b == INF and math.isfinite(a):
        return a + s / (1.0 - s)
    if a == -INF and math.isfinite(b):
        return b - s / (1.0 - s)
    return np.tan(np.pi * (s - 0.5))


MAX_SIGN_CHANGES = 2000


def _sign_intervals(p: DensityPiece) -> list[tuple[float, float]]:
    """Subintervals of the piece on which its density keeps one sign."""
    if p.is_polynomial:
        coef = np.trim_zeros(np.asarray(p.poly.coef, dtype=float), "b")
        if coef.size <= 1:
            return [(p.lo, p.hi)]
        roots = Polynomial(coef).roots()
        scale = max(1.0, float(np.max(np.abs(roots))))
        real = sorted({float(r.real) for r in roots
                       if abs(r.imag) <= 1e-9 * scale and p.lo < r.real < p.hi})
    else:
        real = _callable_roots(p)
    pts = [p.lo, *real, p.hi]
    return [(a, b) for a, b in zip(pts, pts[1:]) if b > a]


def _callable_roots(p: DensityPiece, n: int = 4097) -> list[float]:
    t = _piece_samples(p, n + 2)
    v = p(t)
    if not np.all(np.isfinite(v)):
        raise SignChangeResolutionFailure("density is not finite at sample points")
    s = np.sign(v)
    nz = s != 0
    t, v, s = t[nz], v[nz], s[nz]
    flips = np.nonzero(s[1:] != s[:-1])[0]
    if flips.size > MAX_SIGN_CHANGES:
        raise SignChangeResolutionFailure(f"{flips.size} sign changes detected; cannot isolate them")
    roots = []
    for i in flips:
        try:
            roots.append(brentq(lambda x: float(p(np.array([x]))[0]), t[i], t[i + 1], xtol=1e-15, rtol=1e-15))
        except ValueError as exc:
            raise SignChangeResolutionFailure(f"root bracketing failed near {t[i]}") from exc
    return roots


def linear_combination(coeffs: Sequence[float], measures: Sequence[ScalarMeasure]) -> ScalarMeasure:
    """The measure sum_i coeffs[i] * measures[i]."""
    if len(coeffs) != len(measures):
        raise ValueError("need one coefficient per measure")
    pts = set()
    for m in measures:
        for p in m.pieces:
            pts.update((p.lo, p.hi))
    pts = sorted(pts)
    pieces = []
    for a, b in zip(pts, pts[1:]):
        mid = _interior_point(a, b)
        terms = []
        for c, m in zip(coeffs, measures):
            if c == 0.0 or not m.pieces:
                continue
            k = int(m.piece_index(np.array([mid]))[0])
            if k >= 0:
                terms.append((float(c), m.pieces[k]))
        if not terms:
            continue
        if all(piece.is_polynomial for _, piece in terms):
            poly = Polynomial([0.0])
            for c, piece in terms:
                poly = poly + c * piece.poly
            pieces.append(DensityPiece(a, b, poly=poly))
        else:
            pieces.append(DensityPiece(a, b, func=_Combination(terms)))
    atoms = []
    for c, m in zip(coeffs, measures):
        atoms.extend((x, c * w) for x, w in m.atoms)
    tails = [c * m.tail_mass for c, m in zip(coeffs, measures) if c != 0.0 and m.tail_mass != 0.0]
    return ScalarMeasure(tuple(pieces), tuple(atoms), _sum_extended(tails) if tails else 0.0)


def measure_of(m: ScalarMeasure, A) -> float:
    """Functional form of ``ScalarMeasure.measure_of``."""
    return m.measure_of(A)


def total_variation(m: ScalarMeasure) -> ScalarMeasure:
    """Functional form of ``ScalarMeasure.total_variation``."""
    return m.total_variation()
