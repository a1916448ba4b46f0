"""Exception hierarchy shared by every module."""


class HardEdgeError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(HardEdgeError, ValueError):
    """An argument lies outside the supported domain."""


class SeriesOverflowError(HardEdgeError, ArithmeticError):
    """A series did not converge within its term cap."""


class SingularityError(HardEdgeError, ArithmeticError):
    """A pole, or a division by a quantity that is numerically zero."""


class StepSizeError(HardEdgeError, RuntimeError):
    """An adaptive integrator drove its step below the allowed minimum."""


class InvariantError(HardEdgeError, RuntimeError):
    """A numerical self-check failed (identity residual, fit, moment gate)."""
