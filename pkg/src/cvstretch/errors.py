"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs violate a physical or parameter constraint."""


class ConvergenceError(RuntimeError):
    """Raised when a truncated or discretised computation fails its accuracy check."""
