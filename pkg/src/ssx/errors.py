"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition (bad argument, malformed file)."""


class ResourceError(RuntimeError):
    """A brute-force routine was asked to exceed its configured size cap."""
