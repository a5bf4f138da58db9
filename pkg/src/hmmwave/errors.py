"""Exception hierarchy shared by the solvers and the command line."""


class HmmWaveError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HmmWaveError, ValueError):
    """A parameter violates a documented precondition."""


class NumericalError(HmmWaveError, ArithmeticError):
    """A computation failed or produced an untrustworthy result."""


class StabilityError(NumericalError):
    """A time-stepping configuration would be unstable (CFL or coarse-grid guard)."""


class DomainError(ConfigError):
    """Sampled data does not cover the region a kernel or stencil needs."""
