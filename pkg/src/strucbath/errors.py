"""Exception types shared across the package."""


class NumericsError(RuntimeError):
    """A quadrature, root search, or fixed-point iteration failed to converge.

    Carries a human-readable account of the last error estimate or residual.
    """


class ConfigError(ValueError):
    """A scenario or table was built from inconsistent or unknown parameters."""


class TruncationError(RuntimeError):
    """The kept eigenspace is too small to represent the initial state."""


class ResourceLimitError(RuntimeError):
    """A requested tensor would exceed the configured memory guard."""
