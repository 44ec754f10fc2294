"""Exception and warning classes shared across the package."""


class DegenerateGeometryError(ValueError):
    """A sphere or hyperplane was requested for a zero vector."""


class UnsupportedDimensionError(ValueError):
    """The operation has no implementation for the requested dimension."""


class DivergentIntegralError(ValueError):
    """The requested integral does not converge for these parameters."""


class NotSquareIntegrableError(ValueError):
    pass


class NotApplicableError(ValueError):
    """The operation needs a property the input does not have (e.g. band limit)."""


class InsufficientDataError(ValueError):
    pass


class StepSizeError(ArithmeticError):
    """Richardson-refined finite differences did not agree."""


class ConfigError(ValueError):
    pass


class TruncationWarning(UserWarning):
    """The truncated part of an r-integral is not negligible."""


class ConvergenceWarning(UserWarning):
    pass
