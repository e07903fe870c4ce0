"""Numerical toolkit for primes ``p = a r^2 + 1`` with ``alpha p + beta`` close to an integer."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    InsufficientPrecision,
    InvalidInput,
    PrecisionBudgetExceeded,
    QeqError,
    ScaleGuardExceeded,
)

__all__ = [
    "__version__",
    "QeqError",
    "InvalidInput",
    "PrecisionBudgetExceeded",
    "InsufficientPrecision",
    "ScaleGuardExceeded",
]
