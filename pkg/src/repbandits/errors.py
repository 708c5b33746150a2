"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A parameter regime required by an algorithm's guarantee is violated."""


class DegenerateGridError(ValueError):
    """Rounding grid of zero width (confidence radius is exactly zero)."""


class NumericError(ArithmeticError):
    """A factorization failed, e.g. a matrix that should be SPD is not."""
