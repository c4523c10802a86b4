"""Exception types raised across the package."""

from __future__ import annotations


class GaugeMeasureError(Exception):
    """Base class for all package errors."""


class RefinementBudgetExceeded(GaugeMeasureError):
    """A gauge-fine partition would need more cells than the budget allows."""


class NonFiniteSum(GaugeMeasureError):
    """A Riemann sum involves a non-finite term that no convention rescues."""


class SignChangeResolutionFailure(GaugeMeasureError):
    """Sign changes of a density could not be isolated."""


class NoConvergence(GaugeMeasureError):
    """Adaptive refinement hit its level or cell cap before meeting tolerance."""


class TailNotControlled(GaugeMeasureError):
    """The tail of an integral over an unbounded set could not be bounded."""


class NotHKLIntegrable(GaugeMeasureError):
    """Directional integrals are not consistent with a single vector."""

    def __init__(self, message: str, residual: float = float("nan"), degenerate: bool = False):
        super().__init__(message)
        self.residual = residual
        self.degenerate = degenerate


class GridMismatch(GaugeMeasureError):
    """Support sets sampled on different direction grids were combined."""


class NegativeScalar(GaugeMeasureError):
    """A convex set was scaled by a negative number."""


class NotConvexlyIntegrable(GaugeMeasureError):
    """Directional integrals do not form the support function of a convex set."""

    def __init__(self, message: str, violation: float = float("nan")):
        super().__init__(message)
        self.violation = violation


class GeneratorViolatesDomination(GaugeMeasureError):
    """A convergence-experiment generator breaks its stated hypothesis."""


class ConfigError(GaugeMeasureError):
    """Malformed configuration or expression."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column
