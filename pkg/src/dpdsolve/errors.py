"""Exception types shared across the package."""


class DpdError(Exception):
    """Base class for every error raised by this package."""


class ContractViolationError(DpdError):
    """An argument or operand violates a documented precondition."""


class ConfigurationError(DpdError):
    """A solver regime or run configuration is internally inconsistent."""


class DivergenceError(DpdError):
    """An iterate became non-finite during a solver run."""


class NumericalFailureError(DpdError):
    """An inner solve finished with an unacceptable residual."""


class UnsupportedPointError(DpdError):
    """A quantity was requested at a point where it is not defined."""
