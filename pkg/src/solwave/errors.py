"""Exception types raised across the package."""


class SolwaveError(Exception):
    """Base class for all package errors."""


class InvalidArgument(SolwaveError, ValueError):
    pass


class DegenerateConstraint(SolwaveError, ValueError):
    """A component with zero mass was passed where a multiplier is needed."""


class InvalidFamily(SolwaveError, ValueError):
    """Parameters lie outside the domain of a closed-form family."""


class SupportOverlap(SolwaveError, ValueError):
    pass


class InternalError(SolwaveError, RuntimeError):
    pass


class NumericalFailure(SolwaveError, RuntimeError):
    """Base for failures of an iterative or time-stepping computation."""


class Diverged(NumericalFailure):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class NumericalBlowup(NumericalFailure):
    def __init__(self, message, last_time=None):
        super().__init__(message)
        self.last_time = last_time


class ConfigError(SolwaveError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
