"""Exception hierarchy shared by the qflow modules."""


class QflowError(Exception):
    """Base class for every error raised by qflow."""


class DomainError(QflowError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(QflowError, ArithmeticError):
    """A numerical procedure failed to produce a usable answer."""


class EscapedAbove(NumericalError):
    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"trajectory exceeded the escape ceiling at t={self.t:.6g}")


class EscapedBelow(NumericalError):
    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"trajectory became negative at t={self.t:.6g}")


class ShootingBracketError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, log=None):
        self.log = list(log or [])
        super().__init__(message)


class PeriodNotFound(NumericalError):
    pass


class ResonanceError(NumericalError):
    pass


class SolveError(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass
