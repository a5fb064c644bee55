"""Exception hierarchy shared by all modules."""


class LewError(Exception):
    """Base class for all errors raised by this package."""


class NonStochastic(LewError, ValueError):
    """Out-weights of some vertex exceed one."""


class Unreachable(LewError, ValueError):
    """Some interior vertex cannot reach the absorbing boundary."""


class WrongGraphKind(LewError, TypeError):
    pass


class SingularSystem(LewError, ArithmeticError):
    pass


class TargetNotBoundary(LewError, ValueError):
    pass


class SeamUndefined(LewError, ValueError):
    pass


class DomainError(LewError, ValueError):
    """Argument outside the domain of a kernel or density."""


class Nonconvergent(LewError, ValueError):
    pass


class NonIntegrable(LewError, ArithmeticError):
    pass


class TooLarge(LewError, ValueError):
    pass


class DegenerateFunctions(LewError, ValueError):
    pass


class MaxStepsExceeded(LewError, RuntimeError):
    pass
