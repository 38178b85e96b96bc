"""Exception hierarchy.

Data problems (bad weights, malformed files) and numerical problems
(undefined statistics, singular systems) are kept apart so the CLI can map
them to distinct exit codes.
"""


class RobspatError(Exception):
    """Base class for all package errors."""


class DataError(RobspatError, ValueError):
    """Invalid input data or configuration."""


class WeightsError(DataError):
    """Invalid spatial weights (self-loop, nonpositive weight, isolated node)."""


class DimensionError(DataError):
    """A field and a weight matrix disagree on the number of locations."""


class NumericalError(RobspatError, ArithmeticError):
    """A computation is undefined or numerically unstable."""


class UndefinedStatisticError(NumericalError):
    """A statistic cannot be evaluated on the given field."""


class ZeroVarianceError(UndefinedStatisticError):
    """The centered field is identically zero."""


class ZeroScaleError(UndefinedStatisticError):
    """A MAD entering a GK-type ratio is zero."""


class SingularSystemError(NumericalError):
    """The SAR system (I - rho W) cannot be solved."""
