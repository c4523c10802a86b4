"""Gauge (Henstock-Kurzweil) integration against scalar, vector and set-valued measures."""

from ._backend import BACKEND
from .convex import (
    Ball, Box, SupportSet, Zonotope, from_generator, hausdorff, minkowski_sum, norm_of_set, scale,
    validate_convexity, zero_set,
)
from .domain import (
    Gauge, Interval, MeasurableSet, TaggedPartition, difference, indicator, intersection, is_delta_fine,
    refine_to_delta_fine, riemann_sum, symmetric_difference, union,
)
from .errors import (
    ConfigError, GaugeMeasureError, GeneratorViolatesDomination, GridMismatch, NegativeScalar, NoConvergence,
    NonFiniteSum, NotConvexlyIntegrable, NotHKLIntegrable, RefinementBudgetExceeded,
    SignChangeResolutionFailure, TailNotControlled,
)
from .functions import PiecewisePolynomial, SimpleFunction
from .hk import HKResult, hk_integrate, hk_integrate_pieces, hk_integrate_unbounded
from .measures import ScalarMeasure, linear_combination, measure_of, total_variation
from .setvalued import (
    BallDensity, BoxDensity, SetValuedMeasure, ZonotopeDensity, rn_equality_check, selection, sv_indefinite,
    sv_kl_henstock_integral, sv_measure_of, sv_measure_of_many, sv_variation, sv_variation_integral,
)
from .vector import (
    DirectionGrid, KLResult, VectorMeasure, alexiewicz_norm, apply_functional, dual_norm, dyadic_family,
    ess_sup, indefinite_integral, kl_henstock_integral, pushforward_operator, semivariation, variation,
    variation_integral, vector_norm,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Ball", "BallDensity", "Box", "BoxDensity", "ConfigError", "DirectionGrid", "Gauge",
    "GaugeMeasureError", "GeneratorViolatesDomination", "GridMismatch", "HKResult", "Interval", "KLResult",
    "MeasurableSet", "NegativeScalar", "NoConvergence", "NonFiniteSum", "NotConvexlyIntegrable",
    "NotHKLIntegrable", "PiecewisePolynomial", "RefinementBudgetExceeded", "ScalarMeasure",
    "SetValuedMeasure", "SignChangeResolutionFailure", "SimpleFunction", "SupportSet", "TaggedPartition",
    "TailNotControlled", "VectorMeasure", "Zonotope", "ZonotopeDensity", "alexiewicz_norm",
    "apply_functional", "difference", "dual_norm", "dyadic_family", "ess_sup", "from_generator", "hausdorff",
    "hk_integrate", "hk_integrate_pieces", "hk_integrate_unbounded", "indefinite_integral", "indicator",
    "intersection", "is_delta_fine", "kl_henstock_integral", "linear_combination", "measure_of",
    "minkowski_sum", "norm_of_set", "pushforward_operator", "refine_to_delta_fine", "riemann_sum",
    "rn_equality_check", "scale", "selection", "semivariation", "sv_indefinite", "sv_kl_henstock_integral",
    "sv_measure_of", "sv_measure_of_many", "sv_variation", "sv_variation_integral", "symmetric_difference",
    "total_variation", "union", "validate_convexity", "variation", "variation_integral", "vector_norm",
    "zero_set",
]

