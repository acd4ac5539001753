"""
Exception hierarchy for sevensins.

Every error carries the process exit code the command line maps it to.
"""


class SevenSinsError(Exception):
    """Base class for all errors raised by sevensins."""

    exit_code: int = 70


class NonFiniteError(SevenSinsError):
    """A matrix or vector contains NaN or infinite entries."""

    exit_code = 65


class NoConvergenceError(SevenSinsError):
    """An iterative factorization hit its iteration limit."""


class NotPositiveDefiniteError(SevenSinsError):
    """A matrix that must be positive definite is not.

    Usually a symptom of an indefinite covariance estimate; run the
    covariance diagnosis on the matrix before solving.
    """

    exit_code = 65


class InsufficientDataError(SevenSinsError):
    """Not enough return periods for the requested estimate."""

    exit_code = 65


class NotIndefiniteError(SevenSinsError):
    """The matrix has no negative eigenvalue, so there is nothing to exploit."""


class KappaOutOfRangeError(SevenSinsError):
    """Shrinkage intensity outside [0, 1]."""

    exit_code = 64


class DimensionMismatchError(SevenSinsError):
    """Shapes of vectors and matrices do not agree."""

    exit_code = 65


class CostsMissingError(SevenSinsError):
    """A transaction-cost evaluation was requested on a problem without costs."""


class ZeroMuError(SevenSinsError):
    """The expected-return vector is zero and the closed form is undefined."""


class ZeroPositionError(SevenSinsError):
    """The Sharpe ratio is not defined at the zero position."""


class InfeasibleStartError(SevenSinsError):
    """No feasible starting point exists for a heuristic search."""


class IterationLimitError(SevenSinsError):
    """An iterative method ran out of iterations before deciding."""


class ValidationError(SevenSinsError):
    """A configuration or problem value violates its documented range."""

    exit_code = 64


class DataFormatError(SevenSinsError):
    """An input file could not be parsed."""

    exit_code = 65


class UsageError(SevenSinsError):
    """Command-line arguments are inconsistent."""

    exit_code = 64
