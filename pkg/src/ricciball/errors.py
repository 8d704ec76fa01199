"""Exception types shared across the package."""


class RicciBallError(Exception):
    """Base class for all package errors."""


class InvalidStateError(RicciBallError):
    """A metric state violates a structural invariant (a > 0, b(0) = 0, ...)."""


class DegenerateMetricError(RicciBallError):
    """b <= 0 at an interior node: the metric has collapsed."""


class PoleUndefinedError(RicciBallError):
    """A quantity was requested at the pole where it is not defined (e.g. H)."""


class DomainError(RicciBallError):
    """Argument outside the mathematical domain (e.g. negative flow time)."""


class ConfigError(RicciBallError):
    """Malformed or inconsistent run configuration."""


class StepRejectedError(RicciBallError):
    """A time step produced a nonpositive or nonfinite field."""


class DtCollapseError(RicciBallError):
    """Adaptive dt fell below dt_min: blow-up or ill-posed configuration."""


class NewtonDivergenceError(RicciBallError):
    """The implicit solver's Newton iteration failed to converge."""
