"""Exception types shared across the package."""


class BosonWalkError(Exception):
    """Base class for all errors raised by bosonwalk."""


class DomainError(BosonWalkError, ValueError):
    """An argument lies outside the domain of an operation."""


class SizingError(BosonWalkError):
    """A requested Hilbert space exceeds a configured size cap.

    The offending dimension is kept on ``dimension`` so callers can report
    or adjust the cap.
    """

    def __init__(self, message, dimension, cap):
        super().__init__(message)
        self.dimension = dimension
        self.cap = cap


class NumericalError(BosonWalkError):
    """An iterative numerical method failed to meet its accuracy contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
