"""Closed-form references used by the tests.

Everything here is computed without the package's integrators: polynomial
products are integrated through their exact antiderivatives.
"""

import math

import numpy as np
from numpy.polynomial import Polynomial


def random_piecewise(rng, lo=0.0, hi=1.0, max_pieces=4, max_degree=3, scale=2.0):
    """(breaks, coeffs) of a random piecewise polynomial on [lo, hi]."""
    k = int(rng.integers(1, max_pieces + 1))
    inner = np.sort(rng.uniform(lo, hi, k - 1))
    breaks = [lo, *inner.tolist(), hi]
    coeffs = [rng.uniform(-scale, scale, int(rng.integers(1, max_degree + 2))).tolist() for _ in range(k)]
    return breaks, coeffs


def random_nonnegative_piecewise(rng, lo=0.0, hi=1.0, max_pieces=4):
    """Piecewise polynomial that is >= 0: squares plus a constant."""
    breaks, _ = random_piecewise(rng, lo, hi, max_pieces)
    coeffs = []
    for _ in range(len(breaks) - 1):
        p = Polynomial(rng.uniform(-1, 1, 2))
        q = p * p + Polynomial([rng.uniform(0, 1)])
        coeffs.append(q.coef.tolist())
    return breaks, coeffs


def _piece_at(breaks, t):
    k = int(np.searchsorted(breaks, t, side="right")) - 1
    if k < 0 or k >= len(breaks) - 1:
        return None
    return k


def product_integral(f_breaks, f_coeffs, r_breaks, r_coeffs, a, b):
    """Exact integral over [a, b] of f * rho for two piecewise polynomials."""
    pts = sorted({a, b, *[x for x in list(f_breaks) + list(r_breaks) if a < x < b]})
    terms = []
    for lo, hi in zip(pts, pts[1:]):
        mid = 0.5 * (lo + hi)
        i, j = _piece_at(f_breaks, mid), _piece_at(r_breaks, mid)
        if i is None or j is None:
            continue
        P = (Polynomial(f_coeffs[i]) * Polynomial(r_coeffs[j])).integ()
        terms.append(P(hi) - P(lo))
    return math.fsum(terms)


def polynomial_integral(coeffs, a, b):
    P = Polynomial(coeffs).integ()
    return P(b) - P(a)
