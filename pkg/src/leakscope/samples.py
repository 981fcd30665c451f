"""Measurement records produced by the collector and persisted by the store."""

from dataclasses import dataclass, field
from typing import Dict, Optional

from .events import EventSet


@dataclass(frozen=True)
class Sample:
    """Event counts of one measurement window for one labeled input."""

    category: str
    run_index: int
    counts: Dict[str, int]

    def __post_init__(self):
        if not isinstance(self.run_index, int) or self.run_index < 0:
            raise ValueError(f"run_index must be a nonnegative integer, got {self.run_index!r}")
        counts = dict(self.counts)
        for name, value in counts.items():
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(f"count for {name!r} must be an integer, got {value!r}")
            if value < 0:
                raise ValueError(f"count for {name!r} is negative ({value})")
        object.__setattr__(self, "counts", counts)

    def key(self):
        return (self.category, self.run_index)


@dataclass(frozen=True)
class Metadata:
    backend: str
    timestamp: Optional[str] = None
    seed: Optional[int] = None
    host: Optional[str] = None
    source: Optional[str] = None


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Samples for one event set, grouped by category.

    Equality compares content only: the same event names and the same
    samples, regardless of order and metadata.
    """

    events: EventSet
    samples: tuple
    metadata: Metadata = field(default_factory=lambda: Metadata("unknown"))

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ValueError("a measurement set needs at least one sample")
        names = set(self.events.names)
        seen = set()
        for s in self.samples:
            if set(s.counts) != names:
                raise ValueError(
                    f"sample {s.key()} has counts for {sorted(s.counts)}, expected {sorted(names)}"
                )
            if s.key() in seen:
                raise ValueError(f"duplicate sample {s.key()}")
            seen.add(s.key())

    @property
    def categories(self) -> list:
        """Category labels in first-appearance order."""
        return list(dict.fromkeys(s.category for s in self.samples))

    def counts(self, category: str, event: str) -> list:
        """Counts of ``event`` for ``category`` ordered by run index."""
        rows = sorted((s for s in self.samples if s.category == category), key=lambda s: s.run_index)
        return [s.counts[event] for s in rows]

    def distributions(self) -> dict:
        """Map (category, event) -> counts ordered by run index."""
        out = {}
        for s in sorted(self.samples, key=Sample.key):
            for event in self.events.names:
                out.setdefault((s.category, event), []).append(s.counts[event])
        return out

    def _canonical(self):
        return (
            frozenset(self.events.names),
            sorted((s.category, s.run_index, sorted(s.counts.items())) for s in self.samples),
        )

    def __eq__(self, other):
        if not isinstance(other, MeasurementSet):
            return NotImplemented
        return self._canonical() == other._canonical()

    __hash__ = None
