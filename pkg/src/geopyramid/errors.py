"""Exception hierarchy.

Two branches matter to callers: :class:`ValidationError` for bad inputs or
configuration (CLI exit code 1) and :class:`NumericalError` for failures that
arise during computation, such as a non-convergent mean or a point pair on the
cut locus (CLI exit code 2).
"""

from __future__ import annotations


class GeoPyramidError(Exception):
    """Base class for all library errors."""


class ValidationError(GeoPyramidError, ValueError):
    """Input, shape, or configuration is invalid."""


class MaskError(ValidationError):
    """A mask does not satisfy the requirements of the requested operation."""


class NumericalError(GeoPyramidError):
    """A numerical procedure failed."""


class SymbolRootError(NumericalError):
    """The Laurent symbol has a root on (or numerically on) the unit circle."""


class EmptyTruncationError(NumericalError):
    """Truncation removed every coefficient."""


class NearZeroSumError(NumericalError):
    """Coefficient sum is too close to zero to normalize."""


class CutLocusError(NumericalError):
    """Logarithm requested between points on or near each other's cut locus."""


class InjectivityRadiusError(NumericalError):
    """Tangent vector reaches beyond the injectivity radius."""


class MeanConvergenceError(NumericalError):
    """Weighted mean iteration failed to converge."""


class SpreadError(NumericalError):
    """Window of points is spread beyond the configured safe radius."""
