"""Catalog of countable hardware events and validation of event sets.

Only events in the catalog can be requested. The default catalog is the
portable subset of generic perf events that virtually every x86 and ARM
PMU exposes; platforms with more counters can extend it from a file.
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import DuplicateEvent, TooManyEvents, UnknownEvent

EVENT_KINDS = ("hardware", "software", "cache")
DEFAULT_MAX_PARALLEL = 8

_NAME_RE = re.compile(r"[a-z0-9-]+")


@dataclass(frozen=True)
class EventSpec:
    name: str
    kind: str
    description: str = ""

    def __post_init__(self):
        if not _NAME_RE.fullmatch(self.name):
            raise ValueError(f"invalid event name {self.name!r}: must match [a-z0-9-]+")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"invalid event kind {self.kind!r}: expected one of {EVENT_KINDS}")


DEFAULT_EVENTS = (
    EventSpec("cache-misses", "cache", "last-level cache misses"),
    EventSpec("cache-references", "cache", "last-level cache accesses"),
    EventSpec("branches", "hardware", "retired branch instructions"),
    EventSpec("branch-misses", "hardware", "mispredicted branch instructions"),
    EventSpec("instructions", "hardware", "retired instructions"),
    EventSpec("cpu-cycles", "hardware", "core clock cycles"),
    EventSpec("page-faults", "software", "page faults"),
    EventSpec("context-switches", "software", "context switches"),
)


def _normalize(name: str) -> str:
    return name.strip().lower()


class EventCatalog:
    """Immutable name -> EventSpec lookup table."""

    def __init__(self, events: Iterable[EventSpec] = DEFAULT_EVENTS):
        table = {}
        for spec in events:
            if spec.name in table:
                raise DuplicateEvent(f"event {spec.name!r} listed twice in catalog")
            table[spec.name] = spec
        self._events = table

    def __contains__(self, name) -> bool:
        return _normalize(name) in self._events

    def __iter__(self) -> Iterator[EventSpec]:
        return iter(self._events.values())

    def __len__(self) -> int:
        return len(self._events)

    def names(self) -> list:
        return list(self._events)

    def resolve(self, name: str) -> EventSpec:
        key = _normalize(name)
        try:
            return self._events[key]
        except KeyError:
            raise UnknownEvent(
                f"unknown event {name.strip()!r}; known events: {', '.join(self._events)}"
            ) from None

    def extended(self, extra: Iterable[EventSpec]) -> "EventCatalog":
        """Return a new catalog with ``extra`` appended."""
        return EventCatalog(list(self) + list(extra))

    def extended_from_file(self, path) -> "EventCatalog":
        return self.extended(load_catalog_file(path))


def load_catalog_file(path) -> list:
    """Parse a catalog extension file.

    One event per line as ``name,kind,description``; the description may
    contain commas. Blank lines and lines starting with ``#`` are ignored.
    """
    specs = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",", 2)]
        if len(parts) < 2:
            raise ValueError(f"{path}:{lineno}: expected 'name,kind[,description]'")
        description = parts[2] if len(parts) == 3 else ""
        try:
            specs.append(EventSpec(_normalize(parts[0]), parts[1].lower(), description))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return specs


DEFAULT_CATALOG = EventCatalog()


def resolve_event(name: str, catalog: Optional[EventCatalog] = None) -> EventSpec:
    return (catalog or DEFAULT_CATALOG).resolve(name)


@dataclass(frozen=True)
class EventSet:
    events: tuple
    max_parallel: int = DEFAULT_MAX_PARALLEL

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not self.events:
            raise ValueError("an event set needs at least one event")
        if len(self.events) > self.max_parallel:
            raise TooManyEvents(
                f"{len(self.events)} events requested but at most {self.max_parallel} "
                "can be counted in parallel"
            )
        seen = set()
        for spec in self.events:
            if spec.name in seen:
                raise DuplicateEvent(f"event {spec.name!r} requested more than once")
            seen.add(spec.name)

    @property
    def names(self) -> tuple:
        return tuple(spec.name for spec in self.events)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __eq__(self, other):
        # the cap is a platform setting, not part of the set's identity
        if not isinstance(other, EventSet):
            return NotImplemented
        return self.events == other.events

    def __hash__(self):
        return hash(self.events)


def build_event_set(
    names,
    max_parallel: int = DEFAULT_MAX_PARALLEL,
    catalog: Optional[EventCatalog] = None,
) -> EventSet:
    """Resolve ``names`` into an ordered EventSet, enforcing the counter cap."""
    if max_parallel < 1:
        raise ValueError("max_parallel must be >= 1")
    names = list(names)
    if len(names) > max_parallel:
        raise TooManyEvents(
            f"{len(names)} events requested but at most {max_parallel} "
            "can be counted in parallel"
        )
    catalog = catalog or DEFAULT_CATALOG
    specs = [catalog.resolve(n) for n in names]
    return EventSet(tuple(specs), max_parallel=max_parallel)
