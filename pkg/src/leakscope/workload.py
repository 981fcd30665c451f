"""Deterministic synthetic targets with category-dependent event counts.

Two flavours are provided. :func:`simulate_counts` draws counts from a
per-(category, event) normal model without running anything, which is what
the synthetic collector backend and ``leakscope simulate`` use.
:func:`run_scripted_workload` executes a real busy loop whose memory and
branch activity scale with the profile, giving the perf backend a genuine
child process to measure::

    python -m leakscope.workload profile.json 3
"""

import hashlib
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import InvalidProfile, UnknownCategory, UnknownEvent
from .events import DEFAULT_CATALOG, DEFAULT_MAX_PARALLEL, EventCatalog, build_event_set
from .samples import MeasurementSet, Metadata, Sample

_U64_MAX = 2**64 - 1

# Scripted-workload calibration. Coarse on purpose: only the ordering of
# categories has to survive, not the absolute counts.
_WALK_BUFFER_WORDS = 1 << 22  # 32 MiB of int64, larger than typical LLCs
_ACCESSES_PER_MISS = 1.0
_BRANCH_LOOP_SCALE = 1.0 / 32.0  # each interpreted loop iteration retires dozens of branches


@dataclass(frozen=True)
class CategoryProfile:
    category: str
    event_models: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        models = {}
        for name, (mean, stddev) in self.event_models.items():
            mean, stddev = float(mean), float(stddev)
            if not (mean >= 0 and np.isfinite(mean)):
                raise InvalidProfile(f"category {self.category!r}, event {name!r}: mean must be >= 0")
            if not (stddev >= 0 and np.isfinite(stddev)):
                raise InvalidProfile(f"category {self.category!r}, event {name!r}: stddev must be >= 0")
            models[name] = (mean, stddev)
        object.__setattr__(self, "event_models", models)


@dataclass(frozen=True)
class WorkloadProfile:
    categories: Tuple[CategoryProfile, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if not self.categories:
            raise InvalidProfile("profile has no categories")
        if not (isinstance(self.seed, int) and 0 <= self.seed <= _U64_MAX):
            raise InvalidProfile(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        labels = [c.category for c in self.categories]
        if len(set(labels)) != len(labels):
            raise InvalidProfile("category labels must be distinct")
        reference = set(self.categories[0].event_models)
        if not reference:
            raise InvalidProfile(f"category {labels[0]!r} has no events")
        for cat in self.categories[1:]:
            if set(cat.event_models) != reference:
                raise InvalidProfile(
                    f"category {cat.category!r} covers events {sorted(cat.event_models)}, "
                    f"expected {sorted(reference)}"
                )

    @property
    def labels(self) -> list:
        return [c.category for c in self.categories]

    @property
    def event_names(self) -> list:
        return list(self.categories[0].event_models)

    def category(self, label: str) -> CategoryProfile:
        for cat in self.categories:
            if cat.category == label:
                return cat
        raise UnknownCategory(f"category {label!r} not in profile (have {self.labels})")

    def model(self, label: str, event: str) -> Tuple[float, float]:
        cat = self.category(label)
        try:
            return cat.event_models[event]
        except KeyError:
            raise UnknownEvent(f"event {event!r} not in profile (have {self.event_names})") from None

    def with_seed(self, seed: int) -> "WorkloadProfile":
        return replace(self, seed=seed)

    def validate_events(self, catalog: Optional[EventCatalog] = None):
        catalog = catalog or DEFAULT_CATALOG
        for name in self.event_names:
            catalog.resolve(name)


def profile_from_dict(doc, catalog: Optional[EventCatalog] = None) -> WorkloadProfile:
    if not isinstance(doc, dict):
        raise InvalidProfile("profile must be a JSON object")
    try:
        seed = doc.get("seed", 0)
        categories = []
        for entry in doc["categories"]:
            models = {}
            for name, model in entry["events"].items():
                canonical = (catalog or DEFAULT_CATALOG).resolve(name).name
                models[canonical] = (model["mean"], model["stddev"])
            categories.append(CategoryProfile(str(entry["category"]), models))
    except (KeyError, TypeError, AttributeError) as exc:
        raise InvalidProfile(f"malformed profile: missing or invalid field {exc}") from None
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise InvalidProfile(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return WorkloadProfile(tuple(categories), seed)


def profile_to_dict(profile: WorkloadProfile) -> dict:
    return {
        "seed": profile.seed,
        "categories": [
            {
                "category": cat.category,
                "events": {
                    name: {"mean": mean, "stddev": stddev}
                    for name, (mean, stddev) in cat.event_models.items()
                },
            }
            for cat in profile.categories
        ],
    }


def load_profile(path, catalog: Optional[EventCatalog] = None) -> WorkloadProfile:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidProfile(f"{path}: not valid JSON ({exc})") from None
    return profile_from_dict(doc, catalog)


def substream(seed: int, category: str, event: str) -> np.random.Generator:
    """Independent generator for one (category, event) pair.

    Derived by hashing, so adding or removing a category never shifts the
    draws of any other category.
    """
    digest = hashlib.sha256(
        b"leakscope-substream\0"
        + str(seed).encode()
        + b"\0"
        + category.encode("utf-8")
        + b"\0"
        + event.encode("utf-8")
    ).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:16], "little")))


def draw_counts(rng: np.random.Generator, mean: float, stddev: float, n: int) -> list:
    draws = rng.normal(mean, stddev, size=n) if stddev > 0 else np.full(n, mean)
    return [int(v) for v in np.maximum(np.rint(draws), 0)]


def simulate_counts(profile: WorkloadProfile, category: str, event: str, n: int) -> list:
    """``n`` deterministic nonnegative integer counts for one (category, event)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    mean, stddev = profile.model(category, event)
    return draw_counts(substream(profile.seed, category, event), mean, stddev, n)


def simulate_trace(profile: WorkloadProfile, runs: int, catalog: Optional[EventCatalog] = None) -> MeasurementSet:
    """Every (category, event) of ``profile`` with ``runs`` simulated samples."""
    names = profile.event_names
    events = build_event_set(names, max(DEFAULT_MAX_PARALLEL, len(names)), catalog)
    samples = []
    for label in profile.labels:
        columns = {e: simulate_counts(profile, label, e, runs) for e in names}
        for run in range(runs):
            samples.append(Sample(label, run, {e: columns[e][run] for e in names}))
    return MeasurementSet(events, tuple(samples), Metadata("synthetic", seed=profile.seed))


def run_scripted_workload(profile: WorkloadProfile, category: str) -> int:
    """Busy loop shaped by ``category``'s profile; returns the exit status (0)."""
    cat = profile.category(category)
    miss_mean = cat.event_models.get("cache-misses", (0.0, 0.0))[0]
    branch_mean = cat.event_models.get("branches", (0.0, 0.0))[0]

    accesses = int(miss_mean * _ACCESSES_PER_MISS)
    if accesses > 0:
        rng = substream(profile.seed, category, "scripted-walk")
        buffer = np.arange(_WALK_BUFFER_WORDS, dtype=np.int64)
        index = rng.integers(0, _WALK_BUFFER_WORDS, size=accesses)
        int(buffer[index].sum())

    acc = 0
    for i in range(int(branch_mean * _BRANCH_LOOP_SCALE)):
        if i & 1:
            acc += 1
        else:
            acc -= 1
    return 0


def scripted_command(profile_path, category: str) -> list:
    """Argument vector that runs the scripted workload in a fresh interpreter."""
    return [sys.executable, "-m", "leakscope.workload", str(profile_path), category]


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: python -m leakscope.workload PROFILE.json CATEGORY", file=sys.stderr)
        return 1
    try:
        profile = load_profile(argv[0])
        return run_scripted_workload(profile, argv[1])
    except (InvalidProfile, UnknownCategory, UnknownEvent, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
