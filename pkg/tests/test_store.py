import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakscope.errors import EventSetMismatch, MalformedTrace, UnknownEvent
from leakscope.events import build_event_set
from leakscope.samples import MeasurementSet, Sample
from leakscope.store import dumps_trace, loads_trace, merge_traces, read_trace, write_trace


def make_set(categories=("0", "1"), events=("cache-misses", "branches"), runs=2, base=100):
    es = build_event_set(list(events))
    samples = []
    for ci, c in enumerate(categories):
        for r in range(runs):
            samples.append(Sample(c, r, {e: base + 10 * ci + r + 1000 * ei for ei, e in enumerate(events)}))
    return MeasurementSet(es, tuple(samples))


def test_cardinality():
    text = dumps_trace(make_set())
    lines = text.split("\n")
    assert lines[0] == "category,event,run,count"
    assert text.endswith("\n") and not text.endswith("\n\n")
    assert len(lines) - 1 == 1 + 8


def test_rows_sorted_and_clean():
    text = dumps_trace(make_set())
    rows = [line.split(",") for line in text.splitlines()[1:]]
    keys = [(c, e, int(r)) for c, e, r, _ in rows]
    assert keys == sorted(keys)
    assert all(line == line.rstrip() for line in text.splitlines())
    assert "\r" not in text


def test_write_twice_identical(tmp_path):
    ms = make_set()
    write_trace(ms, tmp_path / "a.csv")
    write_trace(ms, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_round_trip(tmp_path):
    ms = make_set()
    write_trace(ms, tmp_path / "t.csv")
    back = read_trace(tmp_path / "t.csv")
    assert back == ms
    assert len(back.samples) == 4
    assert back.metadata.source == str(tmp_path / "t.csv")


def test_write_to_stream():
    buf = io.StringIO()
    write_trace(make_set(), buf)
    assert buf.getvalue() == dumps_trace(make_set())


def test_replay_row_read_back():
    ms = loads_trace("category,event,run,count\n3,cache-misses,17,70412\n")
    assert ms.samples == (Sample("3", 17, {"cache-misses": 70412}),)


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("category,event,run,count\n", None, "no samples"),
        ("", 1, "header"),
        ("category,event,count,run\n0,branches,1,2\n", 1, "header"),
        ("category,event,run,count\n3,cache-misses,0,-5\n", 2, "negative"),
        ("category,event,run,count\n3,cache-misses,0,1.5\n", 2, "count"),
        ("category,event,run,count\n3,cache-misses,x,1\n", 2, "run"),
        ("category,event,run,count\n3,cache-misses,0,1\n3,cache-misses,0,2\n", 3, "duplicate"),
        ("category,event,run,count\n3,cache-misses,0\n", 2, "4 fields"),
        ("category,event,run,count\n3,cache-misses,0,1,9\n", 2, "4 fields"),
        ("category,event,run,count\n3,cache-misses,0,1\n\n3,cache-misses,1,1\n", 3, "empty row"),
        ("category,event,run,count\n3,Cache-Misses,0,1\n", 2, "canonical"),
    ],
)
def test_malformed(text, line, fragment):
    with pytest.raises(MalformedTrace, match=fragment) as info:
        loads_trace(text)
    assert info.value.line == line
    if line is not None:
        assert f"line {line}" in str(info.value)


def test_ragged_sample():
    text = "category,event,run,count\n0,branches,0,5\n0,cache-misses,0,1\n0,branches,1,6\n"
    with pytest.raises(MalformedTrace, match="missing events"):
        loads_trace(text)


def test_unknown_event_in_trace():
    with pytest.raises(UnknownEvent, match="line 2"):
        loads_trace("category,event,run,count\n0,l2-misses,0,1\n")


def test_crlf_tolerated():
    ms = loads_trace("category,event,run,count\r\n0,branches,0,5\r\n0,branches,1,6\r\n")
    assert ms.counts("0", "branches") == [5, 6]


def test_labels_with_commas_and_quotes_round_trip():
    es = build_event_set(["branches"])
    ms = MeasurementSet(es, (Sample('cat, "big"', 0, {"branches": 1}), Sample(" padded", 0, {"branches": 2})))
    assert loads_trace(dumps_trace(ms)) == ms


def test_merge_disjoint():
    a = make_set(categories=("0",))
    b = make_set(categories=("1",))
    merged = merge_traces(a, b)
    assert merged.samples == a.samples + b.samples
    assert merged.categories == ["0", "1"]


def test_merge_offsets_runs():
    a = make_set(categories=("5",), runs=10)
    b = make_set(categories=("5",), runs=10, base=900)
    merged = merge_traces(a, b)
    assert sorted(s.run_index for s in merged.samples) == list(range(20))
    assert merged.counts("5", "branches")[10:] == b.counts("5", "branches")


def test_merge_event_mismatch():
    with pytest.raises(EventSetMismatch):
        merge_traces(make_set(events=("branches",)), make_set(events=("cache-misses",)))


def relabel(ms):
    """Canonical form up to run-index relabeling: per-category multisets of counts."""
    out = {}
    for s in ms.samples:
        out.setdefault(s.category, []).append(tuple(sorted(s.counts.items())))
    return {k: sorted(v) for k, v in out.items()}


def test_merge_associative_up_to_relabel():
    a = make_set(runs=3)
    b = make_set(runs=2, base=500)
    c = make_set(categories=("1", "2"), runs=4, base=700)
    left = merge_traces(merge_traces(a, b), c)
    right = merge_traces(a, merge_traces(b, c))
    assert relabel(left) == relabel(right)


labels = st.text(alphabet="abcxyz019,\" -", min_size=1, max_size=6)
event_names = st.lists(
    st.sampled_from(["cache-misses", "branches", "instructions", "page-faults"]), min_size=1, max_size=4, unique=True
)


@st.composite
def measurement_sets(draw):
    events = draw(event_names)
    cats = draw(st.lists(labels, min_size=1, max_size=4, unique=True))
    samples = []
    for c in cats:
        runs = draw(st.lists(st.integers(0, 50), min_size=1, max_size=5, unique=True))
        for r in runs:
            samples.append(Sample(c, r, {e: draw(st.integers(0, 2**63)) for e in events}))
    return MeasurementSet(build_event_set(events), tuple(samples))


@settings(max_examples=150, deadline=None)
@given(measurement_sets())
def test_round_trip_property(ms):
    assert loads_trace(dumps_trace(ms)) == ms


@settings(max_examples=150, deadline=None)
@given(measurement_sets(), measurement_sets())
def test_write_injective(a, b):
    if a != b:
        assert dumps_trace(a) != dumps_trace(b)
    else:
        assert dumps_trace(a) == dumps_trace(b)
