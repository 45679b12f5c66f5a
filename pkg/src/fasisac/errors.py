class ConfigurationError(ValueError):
    """Inconsistent dimensions, parameters or configuration values."""


class NumericalPSDError(ArithmeticError):
    """A quadratic form that must be nonnegative came out negative beyond tolerance."""


class StaleCacheError(RuntimeError):
    """A forward cache was used after the network it came from was modified."""
