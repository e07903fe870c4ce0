"""Exception hierarchy shared by every qeq module.

The CLI maps these onto exit codes: ``InvalidInput`` -> 1,
``PrecisionBudgetExceeded`` -> 2, ``ScaleGuardExceeded`` -> 3.
"""


class QeqError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(QeqError, ValueError):
    """A parameter violates a documented precondition."""


class InvalidSpec(InvalidInput):
    """An irrational specification string or term list is malformed or rational."""


class InvalidForm(InvalidInput):
    """A quadratic form violates a Hardy-Littlewood hypothesis."""


class InvalidDelta(InvalidInput):
    pass


class NoSolution(InvalidInput):
    pass


class TailTargetUnreachable(InvalidInput):
    pass


class RangeViolation(InvalidInput):
    pass


class PrecisionBudgetExceeded(QeqError, ArithmeticError):
    """The fixed-point carrier cannot certify the requested result."""


class InsufficientPrecision(PrecisionBudgetExceeded):
    pass


class ScaleGuardExceeded(QeqError):
    """The requested computation exceeds the desk-scale work guard."""


class SegmentTooLarge(ScaleGuardExceeded):
    pass
