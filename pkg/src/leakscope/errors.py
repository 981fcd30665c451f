"""Exception hierarchy shared by all leakscope modules."""


class LeakscopeError(Exception):
    """Base class for every error raised by leakscope."""


# events catalog
class UnknownEvent(LeakscopeError):
    pass


class DuplicateEvent(LeakscopeError):
    pass


class TooManyEvents(LeakscopeError):
    pass


# collection
class PermissionDenied(LeakscopeError):
    pass


class BackendUnavailable(LeakscopeError):
    pass


class InvalidTarget(LeakscopeError):
    pass


class TargetFailed(LeakscopeError):
    pass


class CounterReadError(LeakscopeError):
    pass


class ReplayExhausted(LeakscopeError):
    pass


class InvalidPlan(LeakscopeError, ValueError):
    pass


# workload simulation
class UnknownCategory(LeakscopeError):
    pass


class InvalidProfile(LeakscopeError, ValueError):
    pass


# persistence
class MalformedTrace(LeakscopeError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EventSetMismatch(LeakscopeError):
    pass


class MalformedReport(LeakscopeError):
    pass


# statistics
class EmptySample(LeakscopeError, ValueError):
    pass


class InsufficientSamples(LeakscopeError, ValueError):
    pass


class DegenerateVariance(LeakscopeError, ArithmeticError):
    pass


class InsufficientCategories(LeakscopeError, ValueError):
    pass
