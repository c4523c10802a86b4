"""Integrand helpers that carry their own breakpoints.

Integrators read two optional attributes from any callable: ``breakpoints``
(points where the function may jump or kink) and ``at_infinity`` (its value
at the point +inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .domain import MeasurableSet, _as_set


@dataclass(frozen=True)
class SimpleFunction:
    """Finite sum of constants times indicators of sets."""

    coeffs: tuple[float, ...]
    sets: tuple[MeasurableSet, ...]
    at_infinity: float | None = None

    def __init__(self, coeffs: Sequence[float], sets: Sequence, at_infinity: float | None = None):
        if len(coeffs) != len(sets):
            raise ValueError("need one coefficient per set")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in coeffs))
        object.__setattr__(self, "sets", tuple(_as_set(s) for s in sets))
        if at_infinity is None:
            at_infinity = sum(c for c, s in zip(self.coeffs, self.sets)
                              if s.parts and s.parts[-1].hi == np.inf and s.parts[-1].closed_hi)
        object.__setattr__(self, "at_infinity", float(at_infinity))

    @property
    def breakpoints(self) -> list[float]:
        pts = set()
        for s in self.sets:
            pts.update(x for x in s.endpoints() if np.isfinite(x))
        return sorted(pts)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for c, s in zip(self.coeffs, self.sets):
            out = out + c * np.asarray(s.contains(t), dtype=float)
        return out

    def integral(self, measure, A) -> float:
        """Closed-form integral sum_i c_i m(E_i & A) against a scalar measure."""
        A = _as_set(A)
        return math.fsum(c * measure.measure_of(s & A) for c, s in zip(self.coeffs, self.sets))


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Polynomial ``coeffs[i]`` on [breaks[i], breaks[i+1]); zero outside.

    The last piece is closed on the right.
    """

    breaks: tuple[float, ...]
    polys: tuple[Polynomial, ...]

    def __init__(self, breaks: Sequence[float], coeffs: Sequence[Sequence[float]]):
        if len(breaks) != len(coeffs) + 1:
            raise ValueError("need one coefficient list per piece")
        if any(b <= a for a, b in zip(breaks, breaks[1:])):
            raise ValueError("breaks must increase")
        object.__setattr__(self, "breaks", tuple(float(b) for b in breaks))
        object.__setattr__(self, "polys", tuple(Polynomial(np.asarray(c, dtype=float)) for c in coeffs))

    @property
    def breakpoints(self) -> list[float]:
        return list(self.breaks)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        k = np.searchsorted(self.breaks, t, side="right") - 1
        k = np.where(t == self.breaks[-1], len(self.polys) - 1, k)
        for i, p in enumerate(self.polys):
            sel = k == i
            if np.any(sel):
                out[sel] = p(t[sel])
        return out


def hide_breakpoints(f):
    """Wrap ``f`` so integrators cannot see its breakpoints."""

    def g(t):
        return f(t)

    return g
