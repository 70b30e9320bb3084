import typing as t


class GeoniumError(ValueError):
    """Base class for every error raised by geonium."""


class InvalidDimensionError(GeoniumError):
    pass


class ContractViolationError(GeoniumError):
    pass


class InvalidConfigError(GeoniumError):
    """
    A physical parameter is out of range, or a configuration file is
    malformed or incomplete.  `line` is the source line of the offending
    element when the error comes from a file.
    """

    def __init__(self, message: str, line: t.Optional[int] = None) -> None:
        super().__init__(message)
        self.line = line


class InvalidInputError(GeoniumError):
    pass


class InfeasibleCompensationError(GeoniumError):
    pass


class MeasurementDegenerateError(GeoniumError):
    pass


class UnsupportedPulseError(GeoniumError):
    pass


class TruncationWarning(UserWarning):
    """The top Fock levels of a truncated mode carry non-negligible population."""


class PreconditionWarning(UserWarning):
    """An input lies outside the premise an operation was designed for."""
