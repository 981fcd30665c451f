"""Acquisition of per-classification event counts.

A :class:`Session` pairs a target with an event set and yields one
:class:`~leakscope.samples.Sample` per measurement window. Backends:

``spawn``
    runs the target command once per sample under ``perf stat``; the whole
    process lifetime is the window.
``attach``
    ``perf stat -p PID`` over a fixed wall-clock window. Approximate: the
    window is not aligned with any particular classification.
``synthetic``
    draws counts from a :class:`~leakscope.workload.WorkloadProfile`.
``replay``
    re-emits samples from a recorded trace.

The perf binary is looked up on ``PATH`` unless ``LEAKSCOPE_PERF_PATH`` is set.
"""

import logging
import os
import platform
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Optional, Sequence

from .errors import (
    BackendUnavailable,
    CounterReadError,
    InvalidPlan,
    InvalidTarget,
    LeakscopeError,
    PermissionDenied,
    ReplayExhausted,
    TargetFailed,
    UnknownCategory,
)
from .events import EventSet
from .samples import MeasurementSet, Metadata, Sample
from .workload import WorkloadProfile, draw_counts, load_profile, substream

log = logging.getLogger(__name__)

MODES = ("spawn", "attach", "synthetic", "replay")
PERF_PATH_ENV = "LEAKSCOPE_PERF_PATH"
CATEGORY_PLACEHOLDER = "{category}"

_PERMISSION_HINTS = (
    "permission",
    "perf_event_paranoid",
    "access to performance monitoring",
    "not allowed",
    "operation not permitted",
)


@dataclass(frozen=True)
class TargetSpec:
    """What to measure. Only the fields needed by ``mode`` may be set.

    ``command`` may contain the literal ``{category}``, which is replaced by
    the category label of each measurement.
    """

    mode: str
    command: Optional[Sequence[str]] = None
    pid: Optional[int] = None
    duration_ms: Optional[int] = None
    profile_ref: object = None
    trace_ref: object = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidTarget(f"unknown mode {self.mode!r}; expected one of {MODES}")
        required = {
            "spawn": {"command"},
            "attach": {"pid", "duration_ms"},
            "synthetic": {"profile_ref"},
            "replay": {"trace_ref"},
        }[self.mode]
        present = {
            name
            for name in ("command", "pid", "duration_ms", "profile_ref", "trace_ref")
            if getattr(self, name) is not None
        }
        if present != required:
            missing = required - present
            extra = present - required
            parts = []
            if missing:
                parts.append(f"missing {sorted(missing)}")
            if extra:
                parts.append(f"unexpected {sorted(extra)}")
            raise InvalidTarget(f"{self.mode} target: " + ", ".join(parts))
        if self.mode == "spawn":
            object.__setattr__(self, "command", tuple(self.command))
            if not self.command:
                raise InvalidTarget("spawn target needs a non-empty command")
        if self.mode == "attach":
            if self.duration_ms <= 0:
                raise InvalidTarget("attach window duration must be > 0 ms")
            if self.pid <= 0:
                raise InvalidTarget(f"invalid pid {self.pid}")


def find_perf() -> str:
    override = os.environ.get(PERF_PATH_ENV)
    if override:
        if os.path.isfile(override) and os.access(override, os.X_OK):
            return override
        raise BackendUnavailable(f"{PERF_PATH_ENV}={override} is not an executable file")
    found = shutil.which("perf")
    if found is None:
        raise BackendUnavailable("perf binary not found on PATH (set LEAKSCOPE_PERF_PATH)")
    return found


def _normalize_perf_event(raw: str) -> str:
    name = raw.strip()
    # hybrid PMUs report e.g. "cpu_core/cache-misses/" or "cpu_atom/branches/u"
    m = re.fullmatch(r"[\w.-]+/([^/]+)/\w*", name)
    if m:
        name = m.group(1)
    return name.split(":", 1)[0].strip().lower()


def parse_perf_csv(text: str, events: Sequence[str]) -> dict:
    """Extract counts from ``perf stat -x,`` output.

    Lines for the same event from several PMUs (hybrid CPUs) are summed.
    An event with no numeric line at all is a :class:`CounterReadError`.
    """
    totals = {}
    unreadable = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) < 3:
            continue
        value, event = fields[0].strip(), _normalize_perf_event(fields[2])
        if event not in events:
            continue
        if value.startswith("<"):
            unreadable.setdefault(event, value)
            continue
        try:
            count = int(float(value)) if "." in value else int(value)
        except ValueError:
            raise CounterReadError(f"unparseable count {value!r} for {event}") from None
        totals[event] = totals.get(event, 0) + count
    for event in events:
        if event not in totals:
            reason = unreadable.get(event, "missing from perf output")
            raise CounterReadError(f"counter {event}: {reason}")
    return {event: totals[event] for event in events}


def _looks_like_permission_error(stderr: str) -> bool:
    lowered = stderr.lower()
    return any(hint in lowered for hint in _PERMISSION_HINTS)


class _PerfBackend:
    def __init__(self, target: TargetSpec, events: EventSet):
        self.target = target
        self.events = events
        if target.mode == "attach":
            try:
                os.kill(target.pid, 0)
            except ProcessLookupError:
                raise InvalidTarget(f"no process with pid {target.pid}") from None
            except PermissionError:
                pass  # exists, owned by someone else; perf decides
        self.perf = find_perf()

    def measure(self, category: str) -> dict:
        names = list(self.events.names)
        with tempfile.TemporaryDirectory(prefix="leakscope-") as tmp:
            out = os.path.join(tmp, "perf.csv")
            argv = [self.perf, "stat", "-x", ",", "-o", out, "-e", ",".join(names)]
            if self.target.mode == "spawn":
                command = [part.replace(CATEGORY_PLACEHOLDER, category) for part in self.target.command]
                argv += ["--", *command]
            else:
                seconds = self.target.duration_ms / 1000.0
                argv += ["-p", str(self.target.pid), "--", "sleep", f"{seconds:.3f}"]
            log.debug("running %s", argv)
            try:
                proc = subprocess.run(
                    argv,
                    stdin=subprocess.DEVNULL,
                    stdout=subprocess.DEVNULL,
                    stderr=subprocess.PIPE,
                    text=True,
                )
            except OSError as exc:
                raise BackendUnavailable(f"cannot execute {self.perf}: {exc}") from None
            text = ""
            if os.path.exists(out):
                with open(out, encoding="utf-8", errors="replace") as fh:
                    text = fh.read()

        has_counts = any(line.strip() and not line.startswith("#") for line in text.splitlines())
        if proc.returncode != 0:
            if _looks_like_permission_error(proc.stderr):
                raise PermissionDenied(
                    "perf could not open the counters; hardware counters need administrative "
                    "privilege (run as root or lower kernel.perf_event_paranoid). perf said: "
                    + proc.stderr.strip()
                )
            if has_counts:
                raise TargetFailed(f"target exited with status {proc.returncode}")
            raise CounterReadError(
                f"perf exited with status {proc.returncode}: {proc.stderr.strip()}"
            )
        return parse_perf_csv(text, names)


class _SyntheticBackend:
    def __init__(self, profile: WorkloadProfile, events: EventSet):
        missing = [e for e in events.names if e not in profile.event_names]
        if missing:
            raise InvalidTarget(f"profile has no model for events {missing}")
        self.profile = profile
        self.events = events
        self._streams = {}

    def measure(self, category: str) -> dict:
        cat = self.profile.category(category)
        counts = {}
        for event in self.events.names:
            key = (category, event)
            if key not in self._streams:
                self._streams[key] = substream(self.profile.seed, category, event)
            mean, stddev = cat.event_models[event]
            counts[event] = draw_counts(self._streams[key], mean, stddev, 1)[0]
        return counts


class _ReplayBackend:
    def __init__(self, ms: MeasurementSet, events: EventSet):
        if not set(events.names) <= set(ms.events.names):
            missing = sorted(set(events.names) - set(ms.events.names))
            raise InvalidTarget(f"trace does not record events {missing}")
        self.events = events
        self._queues = {}
        for s in sorted(ms.samples, key=Sample.key):
            self._queues.setdefault(s.category, []).append(s)
        self._cursor = {}

    def next_sample(self, category: str) -> Sample:
        if category not in self._queues:
            raise UnknownCategory(f"trace has no samples for category {category!r}")
        pos = self._cursor.get(category, 0)
        queue = self._queues[category]
        if pos >= len(queue):
            raise ReplayExhausted(f"all {len(queue)} recorded samples of category {category!r} consumed")
        self._cursor[category] = pos + 1
        s = queue[pos]
        return Sample(category, s.run_index, {e: s.counts[e] for e in self.events.names})


class Session:
    """One target, one event set, one measurement at a time."""

    def __init__(self, target: TargetSpec, events: EventSet):
        self.target = target
        self.events = events
        self._next_run = {}
        self.seed = None
        if target.mode in ("spawn", "attach"):
            self._backend = _PerfBackend(target, events)
        elif target.mode == "synthetic":
            profile = target.profile_ref
            if not isinstance(profile, WorkloadProfile):
                profile = load_profile(profile)
            self.seed = profile.seed
            self._backend = _SyntheticBackend(profile, events)
        else:
            ms = target.trace_ref
            if not isinstance(ms, MeasurementSet):
                from .store import read_trace

                ms = read_trace(ms)
            self._backend = _ReplayBackend(ms, events)

    def measure_once(self, category: str) -> Sample:
        if self.target.mode == "replay":
            return self._backend.next_sample(category)
        run = self._next_run.get(category, 0)
        counts = self._backend.measure(category)
        self._next_run[category] = run + 1
        return Sample(category, run, counts)

    def metadata(self) -> Metadata:
        live = self.target.mode in ("spawn", "attach")
        return Metadata(
            backend="perf-" + self.target.mode if live else self.target.mode,
            # wall-clock only for live captures; simulated sets stay reproducible
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds") if live else None,
            seed=self.seed,
            host=f"{platform.node()} {platform.system()} {platform.release()} {platform.machine()}"
            if live
            else None,
        )


def open_session(target: TargetSpec, events: EventSet) -> Session:
    return Session(target, events)


def measure_once(session: Session, category: str) -> Sample:
    return session.measure_once(category)


def collect(session: Session, plan) -> MeasurementSet:
    """Measure each ``(category, run_count)`` of ``plan`` in order.

    Samples get run indices ``0..run_count-1`` per category.
    """
    plan = [(str(c), n) for c, n in plan]
    if not plan:
        raise InvalidPlan("empty plan")
    labels = [c for c, _ in plan]
    if len(set(labels)) != len(labels):
        raise InvalidPlan("plan lists a category more than once")
    for category, runs in plan:
        if not isinstance(runs, int) or runs < 1:
            raise InvalidPlan(f"run count for category {category!r} must be >= 1, got {runs!r}")

    samples = []
    for category, runs in plan:
        for run in range(runs):
            try:
                sample = session.measure_once(category)
            except LeakscopeError as exc:
                raise type(exc)(f"category {category!r}, run {run}: {exc}") from exc
            samples.append(replace(sample, run_index=run))
    return MeasurementSet(session.events, tuple(samples), session.metadata())

