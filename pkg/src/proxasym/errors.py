"""Exception hierarchy shared by every module."""


class ProxAsymError(Exception):
    """Base class for all errors raised by proxasym."""


class ParameterError(ProxAsymError, ValueError):
    """A family parameter or constant is outside its admissible range."""


class DomainError(ProxAsymError, ValueError):
    """Input lies outside the domain where an operation is defined."""


class RangeError(DomainError):
    """Evaluation point exceeds the range representable at the current horizon.

    Raise the horizon of the weight sequence instead of extrapolating.
    """


class ExperimentAborted(ProxAsymError):
    """A numerical experiment failed one of its preconditions."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}
