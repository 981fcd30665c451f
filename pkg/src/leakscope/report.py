"""Rendering and (de)serialization of leakage reports.

JSON is the canonical machine format; text and markdown show one row per
category pair with t and p per event, distinguishable pairs marked.
"""

import json
import math
from typing import Dict

from .errors import MalformedReport
from .evaluator import CORRECTIONS, HistogramData, LeakageReport, PairResult, effective_alpha
from .stats import SummaryStats, TTestResult

FORMATS = ("text", "json", "markdown")

# below display precision, shown the way published tables write it
_P_FLOOR = 5e-5


def _t_to_json(t: float):
    if math.isinf(t):
        return "+inf" if t > 0 else "-inf"
    return t


def _t_from_json(value) -> float:
    if value == "+inf":
        return math.inf
    if value == "-inf":
        return -math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedReport(f"invalid t value {value!r}")
    return float(value)


def report_to_dict(report: LeakageReport) -> dict:
    return {
        "alpha": report.alpha,
        "correction": report.correction,
        "events": list(report.events),
        "categories": list(report.categories),
        "summaries": [
            {"category": c, "event": e, "n": s.n, "mean": s.mean, "variance": s.variance}
            for (c, e), s in sorted(report.per_category_summary.items())
        ],
        "pairs": [
            {
                "event": p.event,
                "a": p.category_a,
                "b": p.category_b,
                "t": _t_to_json(p.result.t),
                "df": p.result.df,
                "p": p.result.p,
                "reject": p.result.reject,
            }
            for p in report.pairs
        ],
        "distinguishable": [{"event": e, "a": a, "b": b} for e, a, b in report.distinguishable],
        "alarm": report.alarm,
        "event_alarms": report.event_alarms,
        "histograms": [
            {
                "category": c,
                "event": e,
                "bin_edges": list(h.bin_edges),
                "frequencies": list(h.frequencies),
            }
            for (c, e), h in sorted(report.histograms.items())
        ],
        "metadata": dict(sorted(report.metadata.items())),
    }


def report_to_json(report: LeakageReport) -> bytes:
    return (json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _require(doc, key, kind):
    if key not in doc:
        raise MalformedReport(f"missing key {key!r}")
    value = doc[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind) and not (kind is int and isinstance(value, bool))
    if not ok:
        raise MalformedReport(f"key {key!r} has wrong type {type(value).__name__}")
    return value


def report_from_dict(doc) -> LeakageReport:
    if not isinstance(doc, dict):
        raise MalformedReport("report must be a JSON object")
    try:
        alpha = _require(doc, "alpha", float)
        correction = _require(doc, "correction", str)
        if correction not in CORRECTIONS:
            raise MalformedReport(f"unknown correction {correction!r}")
        events = _require(doc, "events", list)
        categories = _require(doc, "categories", list)
        summaries = {}
        for s in _require(doc, "summaries", list):
            summaries[(s["category"], s["event"])] = SummaryStats(
                _require(s, "n", int), float(_require(s, "mean", float)), float(_require(s, "variance", float))
            )
        level = effective_alpha(alpha, correction, len(categories)) if len(categories) >= 2 else alpha
        pairs = []
        for p in _require(doc, "pairs", list):
            df = p.get("df")
            if df is not None:
                df = float(df)
            result = TTestResult(
                _t_from_json(p["t"]),
                df,
                float(_require(p, "p", float)),
                float(level),
                _require(p, "reject", bool),
            )
            pairs.append(PairResult(_require(p, "event", str), _require(p, "a", str), _require(p, "b", str), result))
        histograms = {}
        for h in _require(doc, "histograms", list):
            histograms[(h["category"], h["event"])] = HistogramData(
                tuple(float(x) for x in h["bin_edges"]), tuple(int(x) for x in h["frequencies"])
            )
        metadata = _require(doc, "metadata", dict)
        alarm = _require(doc, "alarm", bool)
        distinguishable = [
            (d["event"], d["a"], d["b"]) for d in _require(doc, "distinguishable", list)
        ]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedReport):
            raise
        raise MalformedReport(f"invalid report: {exc}") from None

    report = LeakageReport(
        float(alpha), correction, list(events), list(categories), summaries, pairs, histograms, metadata
    )
    if report.alarm != alarm or report.distinguishable != distinguishable:
        raise MalformedReport("alarm/distinguishable fields disagree with the pair results")
    return report


def report_from_json(data) -> LeakageReport:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedReport(f"not valid JSON: {exc}") from None
    return report_from_dict(doc)


def _fmt_t(t: float) -> str:
    if math.isinf(t):
        return "+inf" if t > 0 else "-inf"
    return f"{t:.4f}"


def _fmt_p(p: float, approx: str) -> str:
    if p < _P_FLOOR:
        return approx
    return f"{p:.4f}"


def _pair_label(a: str, b: str) -> str:
    return f"t({a},{b})"


def _pair_grid(report: LeakageReport):
    """Rows of (a, b, {event: PairResult}) in first-seen pair order."""
    rows: Dict[tuple, Dict[str, PairResult]] = {}
    for p in report.pairs:
        rows.setdefault((p.category_a, p.category_b), {})[p.event] = p
    return rows


def alarm_line(report: LeakageReport) -> str:
    if report.alarm:
        return f"ALARM: input-dependent leakage detected ({len(report.distinguishable)} distinguishable pairs)"
    return "OK: no input-dependent leakage detected"


def render_text(report: LeakageReport) -> str:
    out = [
        "leakscope leakage report",
        f"alpha: {report.alpha:g}  correction: {report.correction}",
        f"categories: {', '.join(report.categories)}",
        f"events: {', '.join(report.events)}",
    ]
    if report.per_category_summary:
        out += ["", "mean count per category:"]
        width = max(len(c) for c in report.categories + ["category"])
        out.append("  " + "category".ljust(width) + "".join(f"  {e:>18}" for e in report.events))
        for c in report.categories:
            cells = []
            for e in report.events:
                s = report.per_category_summary.get((c, e))
                cells.append(f"  {s.mean:>18.2f}" if s else f"  {'-':>18}")
            out.append("  " + c.ljust(width) + "".join(cells))

    grid = _pair_grid(report)
    labels = {key: _pair_label(*key) for key in grid}
    width = max([len(v) for v in labels.values()] + [4])
    out += ["", "pairwise Welch t-tests (* = distinguishable):"]
    out.append("  " + "pair".ljust(width) + "".join(f"  {e + ' t':>16} {'p':>8}  " for e in report.events))
    for key, by_event in grid.items():
        line = "  " + labels[key].ljust(width)
        for e in report.events:
            p = by_event.get(e)
            if p is None:
                line += f"  {'-':>16} {'-':>8}  "
                continue
            mark = "*" if p.result.reject else " "
            line += f"  {_fmt_t(p.result.t):>16} {_fmt_p(p.result.p, '~0'):>8}{mark} "
        out.append(line.rstrip())
    out += ["", "per-event verdict:"]
    for e, alarmed in report.event_alarms.items():
        out.append(f"  {e}: {'LEAKS' if alarmed else 'no leakage detected'}")
    out += ["", alarm_line(report)]
    return "\n".join(line.rstrip() for line in out) + "\n"


def render_markdown(report: LeakageReport) -> str:
    out = ["# Leakage report", ""]
    out.append(
        f"Significance level {report.alpha:g}, correction `{report.correction}`. "
        "**Bold** entries are distinguishable category pairs."
    )
    if report.per_category_summary:
        out += ["", "## Mean count per category", ""]
        out.append("| category | " + " | ".join(f"`{e}`" for e in report.events) + " |")
        out.append("|---|" + "---:|" * len(report.events))
        for c in report.categories:
            cells = []
            for e in report.events:
                s = report.per_category_summary.get((c, e))
                cells.append(f"{s.mean:.2f}" if s else "-")
            out.append(f"| {c} | " + " | ".join(cells) + " |")

    out += ["", "## Pairwise t-tests", ""]
    out.append("| pair | " + " | ".join(f"`{e}` t | `{e}` p" for e in report.events) + " |")
    out.append("|---|" + "---:|---:|" * len(report.events))
    for (a, b), by_event in _pair_grid(report).items():
        cells = []
        for e in report.events:
            p = by_event.get(e)
            if p is None:
                cells += ["-", "-"]
                continue
            t, pv = _fmt_t(p.result.t), _fmt_p(p.result.p, "≈0")
            if p.result.reject:
                t, pv = f"**{t}**", f"**{pv}**"
            cells += [t, pv]
        out.append(f"| {_pair_label(a, b)} | " + " | ".join(cells) + " |")
    out += ["", alarm_line(report)]
    return "\n".join(out) + "\n"


def render_report(report: LeakageReport, fmt: str = "text") -> bytes:
    if fmt == "json":
        return report_to_json(report)
    if fmt == "text":
        return render_text(report).encode("utf-8")
    if fmt == "markdown":
        return render_markdown(report).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; valid formats: {', '.join(FORMATS)}")
