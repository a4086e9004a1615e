"""Exception hierarchy shared by the library and the CLI."""


class BeamKeyError(Exception):
    """Base class for all library errors."""


class InputDomainError(BeamKeyError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(BeamKeyError, ValueError):
    """Invalid or inconsistent configuration."""


class InfeasibleWeightError(BeamKeyError, ValueError):
    """A weight vector violates the hardware constraints (e.g. all antennas off)."""


class UndefinedPhaseError(BeamKeyError, ArithmeticError):
    """A received sample has zero magnitude, so its phase is undefined."""


class SchemeInfeasibleError(BeamKeyError):
    """The requested scheme cannot produce a beam sequence under these conditions."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason
