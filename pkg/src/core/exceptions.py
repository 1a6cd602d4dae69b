"""
Solver Exceptions

One root class for every failure the package raises, so callers can catch
``McoptError`` and still dispatch on the concrete subclass.
"""

from typing import Any, Dict, Optional


class McoptError(Exception):
    """Base class for all solver errors."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context = context or {}


# Linear algebra

class NotPositiveDefinite(McoptError):
    """Matrix failed the numerical positive-definiteness test."""


class NoConvergence(McoptError):
    """An iterative numerical kernel exhausted its budget."""


class SingularBlock(McoptError):
    """A per-cone Hessian block could not be inverted."""


class SingularReduced(McoptError):
    """The reduced m x m system stayed indefinite after regularization."""


# Shapes and domains

class ShapeMismatch(McoptError):
    """A cone point does not have the shape of its cone."""


class DimensionMismatch(McoptError):
    """Problem dimensions are inconsistent."""


class RankDeficientA(McoptError):
    """The stacked constraint operator does not have full row rank."""


class OutsideDomain(McoptError):
    """A point lies outside the domain of a barrier or measure."""

    def __init__(
        self,
        message: str,
        condition: str = "interior",
        context: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, context)
        self.condition = condition


class ScalingResidualTooLarge(McoptError):
    """The computed scaling point does not map x onto s."""


class TargetBelowZetaZero(McoptError):
    """zeta equation target is not above its value at zero."""


class DegenerateDirection(McoptError):
    """Direction has a vanishing second-order form."""


class StencilOutsideDomain(McoptError):
    """A finite-difference stencil left the function's domain."""


# Algorithm

class CorrectorStall(McoptError):
    """The damped Newton stage failed to decrease the proximity."""


class PredictorStall(McoptError):
    """The predictor line search collapsed below its minimum step."""


class IterLimit(McoptError):
    """An iteration budget was exhausted."""


# Surfaces

class ParseError(McoptError):
    """A problem file could not be read."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
    ):
        super().__init__(message, {"field": field, "line": line})
        self.field = field
        self.line = line


class VerificationFailure(McoptError):
    """A property suite reported at least one violated check."""
