"""Exception hierarchy.

Configuration-type problems derive from :class:`ValueError`, numerical
breakdowns from :class:`ArithmeticError`, so callers can catch either the
package-specific class or the builtin.
"""


class SaseError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameterError(SaseError, ValueError):
    """A scalar parameter or dimension is outside its admissible range."""


class ShapeError(InvalidParameterError):
    """Array shapes do not agree."""


class InfeasibleError(InvalidParameterError):
    """The requested hardware construction cannot exist."""


class ContractViolationError(SaseError, ValueError):
    """An input breaks a structural precondition (e.g. semi-unitarity)."""


class NumericalError(SaseError, ArithmeticError):
    """Base class for numerical failures."""


class SingularityError(NumericalError):
    """A matrix that must be invertible is (numerically) singular."""


class IllConditionedError(NumericalError):
    """A linear system is too badly conditioned to solve reliably."""


class EstimationError(NumericalError):
    """An estimator could not produce a result from the data."""


class UndefinedMetricError(NumericalError):
    """A metric is undefined for the given input (e.g. zero channel)."""
