"""Exception types raised across the package.

Every error raised by public functions is one of these, so callers can
distinguish bad inputs (their bug) from degenerate data (a modelling
problem) without string matching.
"""


class FuncovError(Exception):
    """Base class for all package errors."""


class InvalidInput(FuncovError):
    """Arguments violate a documented precondition."""


class InvalidOperator(InvalidInput):
    """Matrix is not symmetric positive semi-definite within tolerance."""


class RankZeroOperator(FuncovError):
    """Operator has no eigenvalue above the usable threshold."""


class DimMismatch(InvalidInput):
    """Operands have incompatible dimensions or grids."""


class TooFewSamples(InvalidInput):
    """Not enough raw samples on a token to resample it."""


class TooFewCurves(InvalidInput):
    """Not enough curves in a group to estimate a covariance."""


class EmptySample(InvalidInput):
    """A curve collection that must be nonempty is empty."""


class EmptyInput(InvalidInput):
    """An input file contains no usable records."""


class UnknownLevel(InvalidInput):
    """A factor level is missing from the data or the model."""


class IllConditioned(FuncovError):
    """Penalized normal equations are numerically singular."""


class InvalidKernel(InvalidInput):
    """Covariance kernel is not positive semi-definite on the grid."""
