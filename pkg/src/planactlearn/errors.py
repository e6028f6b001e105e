class PALError(Exception):
    pass


class InvalidInput(PALError, ValueError):
    pass


class InvalidParameter(PALError, ValueError):
    pass


class InvalidState(PALError):
    pass


class UndefinedMetric(PALError, ArithmeticError):
    pass


class InvariantViolation(PALError, AssertionError):
    """Raised when the loop finds its own bookkeeping inconsistent."""
