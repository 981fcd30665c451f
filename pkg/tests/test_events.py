import pytest
from hypothesis import given
from hypothesis import strategies as st

from leakscope.errors import DuplicateEvent, TooManyEvents, UnknownEvent
from leakscope.events import (
    DEFAULT_CATALOG,
    EventCatalog,
    EventSpec,
    build_event_set,
    load_catalog_file,
    resolve_event,
)


def test_resolve_cache_misses():
    spec = resolve_event("cache-misses")
    assert spec.name == "cache-misses"
    assert spec.kind == "cache"


def test_resolve_normalizes_case_and_space():
    assert resolve_event("Branches ").name == "branches"


def test_resolve_rejects_underscore_spelling():
    with pytest.raises(UnknownEvent):
        resolve_event("cache_misses")


def test_default_catalog_contents():
    assert DEFAULT_CATALOG.names() == [
        "cache-misses",
        "cache-references",
        "branches",
        "branch-misses",
        "instructions",
        "cpu-cycles",
        "page-faults",
        "context-switches",
    ]


@pytest.mark.parametrize("name", DEFAULT_CATALOG.names())
def test_resolve_idempotent(name):
    spec = resolve_event(name)
    assert resolve_event(spec.name) == spec


@pytest.mark.parametrize("bad", ["", "Cache-Misses", "cache misses", "l1d.replacement"])
def test_event_spec_name_invariant(bad):
    with pytest.raises(ValueError):
        EventSpec(bad, "hardware")


def test_event_spec_kind_invariant():
    with pytest.raises(ValueError):
        EventSpec("cycles", "raw")


def test_catalog_rejects_duplicates():
    with pytest.raises(DuplicateEvent):
        EventCatalog([EventSpec("a", "hardware"), EventSpec("a", "cache")])


def test_build_event_set_two_events():
    es = build_event_set(["cache-misses", "branches"], 8)
    assert es.names == ("cache-misses", "branches")
    assert len(es) == 2


def test_build_event_set_boundary():
    assert len(build_event_set(["cache-misses"], 1)) == 1


def test_build_event_set_over_cap():
    names = DEFAULT_CATALOG.names() + ["extra-event"]
    catalog = DEFAULT_CATALOG.extended([EventSpec("extra-event", "hardware")])
    assert len(set(names)) == 9
    with pytest.raises(TooManyEvents, match="at most 8"):
        build_event_set(names, 8, catalog)


def test_build_event_set_duplicate():
    with pytest.raises(DuplicateEvent):
        build_event_set(["branches", "Branches"], 8)


def test_build_event_set_unknown():
    with pytest.raises(UnknownEvent):
        build_event_set(["branches", "l2-misses"], 8)


def test_build_event_set_bad_cap():
    with pytest.raises(ValueError):
        build_event_set(["branches"], 0)


@given(
    st.lists(st.sampled_from(DEFAULT_CATALOG.names()), min_size=1, max_size=10),
    st.integers(min_value=1, max_value=10),
)
def test_accepted_sets_respect_invariants(names, cap):
    try:
        es = build_event_set(names, cap)
    except (TooManyEvents, DuplicateEvent):
        assert len(names) > cap or len(set(names)) < len(names)
        return
    assert 1 <= len(es) <= cap
    assert list(es.names) == list(dict.fromkeys(names))


def test_catalog_extension_file(tmp_path):
    path = tmp_path / "extra.events"
    path.write_text(
        "# site-specific counters\n"
        "\n"
        "l1-dcache-load-misses,cache,L1 data cache load misses, all levels\n"
        "bus-cycles,hardware\n",
        encoding="utf-8",
    )
    specs = load_catalog_file(path)
    assert [s.name for s in specs] == ["l1-dcache-load-misses", "bus-cycles"]
    assert specs[0].description == "L1 data cache load misses, all levels"
    catalog = DEFAULT_CATALOG.extended_from_file(path)
    assert catalog.resolve("bus-cycles").kind == "hardware"
    assert "bus-cycles" not in DEFAULT_CATALOG


def test_catalog_extension_bad_line(tmp_path):
    path = tmp_path / "bad.events"
    path.write_text("onlyname\n", encoding="utf-8")
    with pytest.raises(ValueError, match="1"):
        load_catalog_file(path)
