"""Shared exception types."""


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


class ToleranceError(RuntimeError):
    """Raised when an iterative routine cannot meet its requested tolerance."""
