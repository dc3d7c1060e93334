from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from fixtures import overhead_tree, reference_tree
from treeqa.errors import MalformedCache, MalformedTree, PathNotFound
from treeqa.tree import (
    TreeBuilder,
    deep_merge,
    deserialize_cache,
    disambiguate,
    get_data,
    height,
    iter_nodes,
    leaves,
    merge_contexts,
    parse_tree_text,
    qualified_key,
    read_cache,
    resolves,
    serialize_cache,
    skeleton,
    split_qualified_key,
)

labels = st.text(alphabet="abcxyz ", min_size=1, max_size=4)
scalars = st.one_of(st.none(), st.text(max_size=5), st.integers(-100, 100))
trees = st.recursive(scalars, lambda kids: st.dictionaries(labels, kids, min_size=1, max_size=4), max_leaves=20)
maps = st.dictionaries(labels, trees, min_size=1, max_size=4)


@given(maps)
def test_leaves_resolve(t):
    for entry in leaves(t):
        assert get_data(t, entry.path) == entry.value


@given(maps)
def test_skeleton_preserves_shape(t):
    s = skeleton(t)
    assert [e.path for e in leaves(s)] == [e.path for e in leaves(t)]
    assert {e.value for e in leaves(s)} <= {"num", "text", "null"}
    assert height(s) == height(t)


@given(maps)
def test_cache_round_trip(t):
    assert deserialize_cache(serialize_cache(t, {"table_id": "x"})) == t
    assert list(deserialize_cache(serialize_cache(t))) == list(t)


@given(maps)
def test_merge_idempotent_and_identity(t):
    assert deep_merge(t, t) == t
    assert deep_merge(t, {}) == t
    assert deep_merge({}, t) == t


@given(maps, maps)
def test_merge_keeps_base_paths(a, b):
    merged = deep_merge(a, b)
    for e in leaves(a):
        assert get_data(merged, e.path) == e.value


def test_get_data_errors():
    t = overhead_tree()
    assert get_data(t, ("Manufacturing Overhead Budget", "Fixed Expenses", "Quarter 1", "Cash Output")) == "16,635"
    with pytest.raises(PathNotFound) as info:
        get_data(t, ("Manufacturing Overhead Budget", "Nope", "x"))
    assert info.value.prefix == ("Manufacturing Overhead Budget",)
    assert not resolves(t, ("Manufacturing Overhead Budget", "Fixed Expenses", "Quarter 1", "Cash Output", "deeper"))
    assert get_data(t, ()) is t


def test_height_and_nodes():
    assert height("x") == 0
    assert height({}) == 0
    assert height(reference_tree()) == 3
    paths = [p for p, _ in iter_nodes({"a": {"b": 1}, "c": 2})]
    assert paths == [(), ("a",), ("a", "b"), ("c",)]


def test_skeleton_tags():
    assert skeleton({"a": "1,200", "b": "Total", "c": None, "d": 3}) == {"a": "num", "b": "text", "c": "null", "d": "num"}


def test_merge_contexts_absorbs_deeper_paths():
    entries = [(("a", "b"), 1), (("a",), {"b": 1}), (("c",), 2), (("a",), {"b": 1})]
    assert merge_contexts(entries) == [(("a",), {"b": 1}), (("c",), 2)]


def test_qualified_keys():
    k = qualified_key("Year ended December 31,", "2019")
    assert k == "Year ended December 31, - 2019"
    assert split_qualified_key(k) == ("Year ended December 31,", "2019")
    assert split_qualified_key("Category") is None
    with pytest.raises(ValueError):
        qualified_key("", "x")


def test_disambiguate():
    assert disambiguate("Total", []) == "Total"
    assert disambiguate("Total", ["Total", "Total #2"]) == "Total #3"


def test_parse_tree_text_duplicates_and_fences():
    warnings: list[str] = []
    t = parse_tree_text('Here:\n```json\n{"a": 1, "a": 2, "": {"x": [1, 2]}}\n```', warnings=warnings)
    assert t == {"a": 1, "a #2": 2, "(blank)": {"x": {"0": 1, "1": 2}}}
    assert warnings
    with pytest.raises(MalformedTree):
        parse_tree_text("no json here")
    with pytest.raises(MalformedTree):
        parse_tree_text("[1, 2]")


def test_builder_collisions():
    b = TreeBuilder()
    b.insert(("r", "x"), 1)
    assert b.insert(("r", "x"), 2) == ("r", "x #2")
    b.insert(("leaf",), 3)
    assert b.insert(("leaf", "child"), 4) == ("leaf #2", "child")
    assert b.root == {"r": {"x": 1, "x #2": 2}, "leaf": 3, "leaf #2": {"child": 4}}
    with pytest.raises(ValueError):
        b.insert((), 1)


def test_cache_envelope():
    blob = serialize_cache({"a": 1}, {"mode": "DSP"})
    doc = read_cache(blob)
    assert doc.header == {"mode": "DSP"} and doc.tree == {"a": 1}
    assert json.loads(blob)["format"] == "treeqa-cache/1"
    assert read_cache('{"bare": 1}').tree == {"bare": 1}
    with pytest.raises(MalformedCache):
        read_cache(b"\xff\xfe")
    with pytest.raises(MalformedCache):
        read_cache("[1]")
