"""Pairwise leakage evaluation over every event and category pair.

For each event, the count distributions of every unordered pair of
categories are compared with a Welch t-test. Any rejected pair raises the
alarm: an observer of that event could tell the two input classes apart.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .errors import EmptySample, InsufficientCategories, InsufficientSamples
from .samples import MeasurementSet
from .stats import DEFAULT_ALPHA, SummaryStats, TTestResult, summarize, t_test

CORRECTIONS = ("none", "bonferroni")
DEFAULT_BINS = 30


@dataclass(frozen=True)
class HistogramData:
    bin_edges: Tuple[float, ...]
    frequencies: Tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.frequencies)


@dataclass(frozen=True)
class PairResult:
    event: str
    category_a: str
    category_b: str
    result: TTestResult

    def __post_init__(self):
        if not self.category_a < self.category_b:
            raise ValueError(
                f"pair ({self.category_a!r}, {self.category_b!r}) is not in canonical order"
            )

    @property
    def key(self):
        return (self.event, (self.category_a, self.category_b))


@dataclass(frozen=True)
class LeakageReport:
    alpha: float
    correction: str
    events: List[str]
    categories: List[str]
    per_category_summary: Dict[Tuple[str, str], SummaryStats]
    pairs: List[PairResult]
    histograms: Dict[Tuple[str, str], HistogramData] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def distinguishable(self) -> List[Tuple[str, str, str]]:
        return [(p.event, p.category_a, p.category_b) for p in self.pairs if p.result.reject]

    @property
    def alarm(self) -> bool:
        return any(p.result.reject for p in self.pairs)

    @property
    def event_alarms(self) -> Dict[str, bool]:
        alarms = {e: False for e in self.events}
        for p in self.pairs:
            if p.result.reject:
                alarms[p.event] = True
        return alarms

    def pair(self, event: str, a: str, b: str) -> PairResult:
        a, b = sorted((a, b))
        for p in self.pairs:
            if p.event == event and p.category_a == a and p.category_b == b:
                return p
        raise KeyError((event, a, b))


def histogram(counts, bins: int = DEFAULT_BINS) -> HistogramData:
    """Equal-width histogram over [min, max]; the last bin is closed on the right.

    A constant sample yields one unit-width bin centred on the value.
    """
    values = np.asarray(list(counts), dtype=float)
    if values.size == 0:
        raise EmptySample("cannot build a histogram of an empty sample")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return HistogramData((lo - 0.5, lo + 0.5), (int(values.size),))
    freqs, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return HistogramData(tuple(float(e) for e in edges), tuple(int(f) for f in freqs))


def effective_alpha(alpha: float, correction: str, n_categories: int) -> float:
    if correction == "none":
        return alpha
    if correction == "bonferroni":
        return alpha / math.comb(n_categories, 2)
    raise ValueError(f"unknown correction {correction!r}; expected one of {CORRECTIONS}")


def evaluate(
    ms: MeasurementSet,
    alpha: float = DEFAULT_ALPHA,
    correction: str = "none",
    bins: int = DEFAULT_BINS,
    metadata: Optional[dict] = None,
) -> LeakageReport:
    """Run every (event, category pair) t-test over ``ms``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if correction not in CORRECTIONS:
        raise ValueError(f"unknown correction {correction!r}; expected one of {CORRECTIONS}")
    categories = sorted(ms.categories)
    if len(categories) < 2:
        raise InsufficientCategories(
            f"need at least 2 categories to compare, got {len(categories)}"
        )
    events = list(ms.events.names)
    dists = ms.distributions()
    for category in categories:
        for event in events:
            n = len(dists[(category, event)])
            if n < 2:
                raise InsufficientSamples(
                    f"category {category!r}, event {event!r} has {n} sample(s); need >= 2"
                )

    level = effective_alpha(alpha, correction, len(categories))
    summaries = {}
    hists = {}
    for category in categories:
        for event in events:
            summaries[(category, event)] = summarize(dists[(category, event)])
            hists[(category, event)] = histogram(dists[(category, event)], bins)

    pairs = []
    for event in events:
        for a, b in combinations(categories, 2):
            res = t_test(dists[(a, event)], dists[(b, event)], level)
            pairs.append(PairResult(event, a, b, res))

    meta = {"tool": "leakscope", "version": __version__, "backend": ms.metadata.backend}
    if ms.metadata.source is not None:
        meta["source"] = ms.metadata.source
    if ms.metadata.seed is not None:
        meta["seed"] = ms.metadata.seed
    meta.update(metadata or {})
    return LeakageReport(alpha, correction, events, categories, summaries, pairs, hists, meta)


def report_from_results(entries, alpha: float = DEFAULT_ALPHA, metadata=None) -> LeakageReport:
    """Build a report from precomputed ``(event, a, b, t, p)`` rows.

    Used to re-judge published or externally computed t/p tables. The sign of
    ``t`` is flipped when ``a``/``b`` have to be swapped into canonical order.
    """
    events, categories, pairs = [], set(), []
    for event, a, b, t, p in entries:
        a, b = str(a), str(b)
        if a > b:
            a, b, t = b, a, -t
        if event not in events:
            events.append(event)
        categories.update((a, b))
        pairs.append(PairResult(event, a, b, TTestResult(t, None, p, alpha, p < alpha)))
    return LeakageReport(alpha, "none", events, sorted(categories), {}, pairs, {}, dict(metadata or {}))


def decision_pattern(report: LeakageReport) -> Dict[Tuple[str, Tuple[str, str]], bool]:
    """(event, (category_a, category_b)) -> whether the pair is distinguishable."""
    return {p.key: p.result.reject for p in report.pairs}
