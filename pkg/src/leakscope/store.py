"""Trace files: the long ``category,event,run,count`` CSV format.

Writing is byte-deterministic (rows sorted, ``\\n`` line endings, UTF-8),
so traces can be diffed and hashed. Counts are always exact integers.
"""

import io
import sys
from dataclasses import replace
from typing import Optional

from .errors import EventSetMismatch, MalformedTrace, UnknownEvent
from .events import DEFAULT_CATALOG, DEFAULT_MAX_PARALLEL, EventCatalog, EventSet
from .samples import MeasurementSet, Metadata, Sample

HEADER = "category,event,run,count"


def _quote(field: str) -> str:
    if any(ch in field for ch in ',"\n\r') or field != field.strip():
        return '"' + field.replace('"', '""') + '"'
    return field


def _split_row(line: str, lineno: int) -> list:
    # minimal RFC 4180 splitter; category labels are the only free text
    fields, buf, i, quoted = [], [], 0, False
    while i < len(line):
        ch = line[i]
        if quoted:
            if ch == '"':
                if i + 1 < len(line) and line[i + 1] == '"':
                    buf.append('"')
                    i += 1
                else:
                    quoted = False
            else:
                buf.append(ch)
        elif ch == '"' and not buf:
            quoted = True
        elif ch == ",":
            fields.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
        i += 1
    if quoted:
        raise MalformedTrace("unterminated quoted field", lineno)
    fields.append("".join(buf))
    return fields


def dumps_trace(ms: MeasurementSet) -> str:
    rows = []
    for s in ms.samples:
        for event, count in s.counts.items():
            rows.append((s.category, event, s.run_index, count))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    lines = [HEADER]
    lines.extend(f"{_quote(c)},{e},{r},{n}" for c, e, r, n in rows)
    return "\n".join(lines) + "\n"


def write_trace(ms: MeasurementSet, destination) -> None:
    """Write ``ms`` to a path, a text stream, or ``"-"`` for stdout."""
    text = dumps_trace(ms)
    if destination == "-":
        sys.stdout.buffer.write(text.encode("utf-8"))
        sys.stdout.buffer.flush()
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _parse_int(text: str, what: str, lineno: int) -> int:
    if not text.isascii() or not text.isdigit():
        raise MalformedTrace(f"{what} must be a base-10 nonnegative integer, got {text!r}", lineno)
    return int(text)


def loads_trace(
    text: str,
    catalog: Optional[EventCatalog] = None,
    source: Optional[str] = None,
    max_parallel: int = DEFAULT_MAX_PARALLEL,
) -> MeasurementSet:
    catalog = catalog or DEFAULT_CATALOG
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].rstrip("\r") != HEADER:
        got = lines[0] if lines else ""
        raise MalformedTrace(f"expected header {HEADER!r}, got {got!r}", 1)

    cells = {}
    event_order = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\r")
        if not line:
            raise MalformedTrace("empty row", lineno)
        fields = _split_row(line, lineno)
        if len(fields) != 4:
            raise MalformedTrace(f"expected 4 fields, got {len(fields)}", lineno)
        category, event, run_text, count_text = fields
        if not category:
            raise MalformedTrace("empty category label", lineno)
        try:
            spec = catalog.resolve(event)
        except UnknownEvent as exc:
            raise UnknownEvent(f"line {lineno}: {exc}") from None
        if spec.name != event:
            raise MalformedTrace(f"event {event!r} is not in canonical spelling {spec.name!r}", lineno)
        run = _parse_int(run_text, "run", lineno)
        if count_text.startswith("-"):
            raise MalformedTrace(f"negative count {count_text}", lineno)
        count = _parse_int(count_text, "count", lineno)
        key = (category, run)
        if event in cells.setdefault(key, {}):
            raise MalformedTrace(f"duplicate row for ({category}, {event}, {run})", lineno)
        cells[key][event] = count
        if event not in event_order:
            event_order.append(event)

    if not cells:
        raise MalformedTrace("no samples")
    expected = set(event_order)
    for (category, run), counts in cells.items():
        if set(counts) != expected:
            missing = sorted(expected - set(counts))
            raise MalformedTrace(f"sample ({category}, run {run}) is missing events {missing}")

    events = EventSet(
        tuple(catalog.resolve(e) for e in event_order),
        max_parallel=max(max_parallel, len(event_order)),
    )
    samples = tuple(Sample(c, r, counts) for (c, r), counts in cells.items())
    return MeasurementSet(events, samples, Metadata("replay", source=source))


def read_trace(source, catalog: Optional[EventCatalog] = None) -> MeasurementSet:
    """Read a trace from a path, a text stream, or ``"-"`` for stdin."""
    if source == "-":
        text = sys.stdin.buffer.read().decode("utf-8")
        name = "-"
    elif hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        name = getattr(source, "name", None)
    else:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
        name = str(source)
    return loads_trace(text, catalog, source=name)


def merge_traces(a: MeasurementSet, b: MeasurementSet) -> MeasurementSet:
    """Union of two sets; ``b``'s run indices move past ``a``'s per-category maximum."""
    if set(a.events.names) != set(b.events.names):
        raise EventSetMismatch(
            f"cannot merge event sets {list(a.events.names)} and {list(b.events.names)}"
        )
    offset = {}
    for s in a.samples:
        offset[s.category] = max(offset.get(s.category, 0), s.run_index + 1)
    shifted = [replace(s, run_index=s.run_index + offset.get(s.category, 0)) for s in b.samples]
    return MeasurementSet(a.events, a.samples + tuple(shifted), a.metadata)


def trace_bytes(ms: MeasurementSet) -> bytes:
    return dumps_trace(ms).encode("utf-8")


def read_trace_bytes(data: bytes, catalog: Optional[EventCatalog] = None) -> MeasurementSet:
    return read_trace(io.StringIO(data.decode("utf-8")), catalog)
