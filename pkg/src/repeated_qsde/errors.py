"""Exception types shared across the package."""


class QSDEError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QSDEError, ValueError):
    """An input violates a structural or numerical precondition.

    ``residual`` carries the offending numeric defect when there is one and
    ``key`` the configuration path that produced the value, if known.
    """

    def __init__(self, message, residual=None, key=None):
        super().__init__(message)
        self.residual = residual
        self.key = key


class CapacityError(QSDEError, MemoryError):
    """A dense object would exceed the configured entry budget."""

    def __init__(self, message, requested=None, limit=None):
        super().__init__(message)
        self.requested = requested
        self.limit = limit
