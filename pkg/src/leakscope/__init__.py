"""leakscope: input-leakage evaluation from hardware performance counters."""

__version__ = "0.1.0"

from .errors import LeakscopeError  # noqa: E402
from .events import EventSet, EventSpec, build_event_set, resolve_event  # noqa: E402
from .stats import TTestResult, p_two_tailed, summarize, t_test, welch_t  # noqa: E402

__all__ = [
    "__version__",
    "LeakscopeError",
    "EventSet",
    "EventSpec",
    "build_event_set",
    "resolve_event",
    "TTestResult",
    "p_two_tailed",
    "summarize",
    "t_test",
    "welch_t",
]
