"""Exception types raised by the framework itself (never injected faults)."""


class FaultlineError(Exception):
    """Base class for framework errors."""


class UnknownInterface(FaultlineError):
    """The wrapped object's type has no registered method metadata."""


class StaleHandle(FaultlineError):
    """A deferred handle was resolved after its iteration ended."""


class SchemaError(FaultlineError):
    """A catalog or config document does not match its schema."""


class UnknownMethod(FaultlineError):
    """A catalog entry references a method the interface does not declare."""


class Exhausted(FaultlineError):
    """A transformer was stepped past the end of its corruption space."""


class ContractViolation(FaultlineError):
    """A transformer broke the step contract (e.g. returned the reference)."""


class BaselineFailed(FaultlineError):
    """The fault-free iteration did not pass, so nothing can be explored.

    ``report`` carries the one-iteration report so callers can still emit it.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OutsideIteration(FaultlineError):
    """A fault-injection predicate was queried with no running iteration."""
