"""Exception hierarchy shared by all modules."""


class QSTCError(Exception):
    """Base class for every error raised by qstc."""


class DimensionError(QSTCError, ValueError):
    pass


class NotSchur(QSTCError):
    pass


class NonConvergence(QSTCError):
    pass


class NotControllable(QSTCError):
    pass


class NotObservable(QSTCError):
    pass


class Infeasible(QSTCError):
    """The threshold interval [1/N, 1/alpha) is empty or sigma lies outside it."""

    def __init__(self, message, min_N=None):
        super().__init__(message)
        self.min_N = min_N


class SynthesisFailed(QSTCError):
    pass


class OutOfRange(QSTCError):
    """An output fell outside the current quantization hypercube."""


class BadIndex(QSTCError, ValueError):
    pass


class BudgetViolation(QSTCError):
    pass


class DomainError(QSTCError, ValueError):
    pass


class FrameBreach(QSTCError):
    """Raised by the simulator when the encoder frame invariant is broken."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InvariantBreach(QSTCError):
    """An optional per-step analysis check failed during simulation."""


class DegenerateTrace(QSTCError):
    pass


class SchemaError(QSTCError, ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
