"""The semantic tree: nested, insertion-ordered dicts with scalar leaves.

A tree node is either a ``dict`` (label -> child) or a scalar leaf
(``str``, ``int``, ``float``, ``bool`` or ``None``). Paths are tuples of
labels starting below the implicit root, so ``()`` addresses the whole tree.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence, Union

from .errors import MalformedCache, MalformedTree, PathNotFound
from .numeric import is_numeric

log = logging.getLogger(__name__)

Scalar = Union[str, int, float, bool, None]
Tree = Union[dict, Scalar]
TreePath = tuple[str, ...]

QUALIFIED_SEP = " - "
BLANK_LABEL = "(blank)"
CACHE_FORMAT = "treeqa-cache/1"


def is_internal(node: Any) -> bool:
    return isinstance(node, dict)


@dataclass(frozen=True)
class LeafEntry:
    path: TreePath
    value: Scalar


def leaves(t: Tree) -> list[LeafEntry]:
    """Depth-first, insertion-order list of every leaf with its full path."""
    return list(iter_leaves(t))


def iter_leaves(t: Tree, prefix: TreePath = ()) -> Iterator[LeafEntry]:
    if not is_internal(t):
        yield LeafEntry(prefix, t)
        return
    for label, child in t.items():
        yield from iter_leaves(child, prefix + (label,))


def iter_nodes(t: Tree, prefix: TreePath = ()) -> Iterator[tuple[TreePath, Tree]]:
    """Pre-order walk over every node, root included."""
    yield prefix, t
    if is_internal(t):
        for label, child in t.items():
            yield from iter_nodes(child, prefix + (label,))


def get_data(t: Tree, p: Sequence[str]) -> Tree:
    node = t
    for i, label in enumerate(p):
        if not is_internal(node) or label not in node:
            raise PathNotFound(tuple(p), tuple(p[:i]))
        node = node[label]
    return node


def resolves(t: Tree, p: Sequence[str]) -> bool:
    try:
        get_data(t, p)
    except PathNotFound:
        return False
    return True


def height(t: Tree) -> int:
    """Number of labels on the longest root-to-leaf path."""
    if not is_internal(t) or not t:
        return 0
    return 1 + max(height(c) for c in t.values())


def leaf_tag(value: Scalar) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "text"
    if isinstance(value, (int, float)) or is_numeric(value):
        return "num"
    return "text"


def skeleton(t: Tree) -> Tree:
    """Same labels in the same order, every leaf replaced by its type tag."""
    if not is_internal(t):
        return leaf_tag(t)
    return {label: skeleton(child) for label, child in t.items()}


# -- evidence merging ---------------------------------------------------------


def _is_prefix(a: TreePath, b: TreePath) -> bool:
    return len(a) <= len(b) and b[: len(a)] == a


def merge_contexts(entries: Iterable[tuple[TreePath, Tree]]) -> list[tuple[TreePath, Tree]]:
    """Drop duplicates and any entry already covered by a shallower one.

    Survivors keep the order in which they first appear.
    """
    items = []
    seen: set[TreePath] = set()
    for path, value in entries:
        path = tuple(path)
        if path not in seen:
            seen.add(path)
            items.append((path, value))
    kept = []
    for path, value in items:
        if any(other != path and _is_prefix(other, path) for other in seen):
            continue
        kept.append((path, value))
    return kept


# -- qualified keys -----------------------------------------------------------


def qualified_key(header: str, value: object) -> str:
    if not header:
        raise ValueError("header must be non-empty")
    return f"{header}{QUALIFIED_SEP}{'' if value is None else value}"


def split_qualified_key(key: str) -> tuple[str, str] | None:
    """Split on the first separator; ``None`` when the key is not qualified."""
    head, sep, rest = key.partition(QUALIFIED_SEP)
    if not sep:
        return None
    return head, rest


# -- building and repairing trees ---------------------------------------------


def disambiguate(label: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    if label not in taken:
        return label
    n = 2
    while f"{label} #{n}" in taken:
        n += 1
    return f"{label} #{n}"


def _pairs_hook(pairs: list[tuple[str, Any]]) -> dict:
    out: dict = {}
    for key, value in pairs:
        if key in out:
            new = disambiguate(key, out)
            log.warning("duplicate sibling label %r renamed to %r", key, new)
            key = new
        out[key] = value
    return out


def coerce_tree(value: Any, *, warnings: list[str] | None = None) -> Tree:
    """Force decoded JSON into tree shape.

    Lists become maps keyed by position, empty labels become ``(blank)``.
    """
    if isinstance(value, dict):
        out: dict = {}
        for key, child in value.items():
            label = str(key)
            if not label.strip():
                label = disambiguate(BLANK_LABEL, out)
                if warnings is not None:
                    warnings.append(f"empty label replaced by {label!r}")
            elif label in out:
                label = disambiguate(label, out)
            out[label] = coerce_tree(child, warnings=warnings)
        return out
    if isinstance(value, list):
        if warnings is not None:
            warnings.append("list node converted to positional keys")
        return {str(i): coerce_tree(v, warnings=warnings) for i, v in enumerate(value)}
    if value is None or isinstance(value, (str, int, float, bool)):
        return value
    raise MalformedTree(f"unsupported node type {type(value).__name__}")


def extract_json_text(text: str, opener: str = "{") -> str:
    """Pull the first JSON document out of a chatty model response."""
    closer = "}" if opener == "{" else "]"
    body = text.strip()
    if "```" in body:
        parts = body.split("```")
        for chunk in parts[1::2]:
            chunk = chunk.strip()
            if chunk.startswith("json"):
                chunk = chunk[4:].strip()
            if chunk.startswith(opener):
                return chunk
    start = body.find(opener)
    end = body.rfind(closer)
    if start == -1 or end < start:
        return body
    return body[start : end + 1]


def loads_ordered(text: str) -> Any:
    """``json.loads`` keeping duplicate keys as ``label #2`` instead of dropping them."""
    return json.loads(text, object_pairs_hook=_pairs_hook)


def parse_tree_text(text: str, *, warnings: list[str] | None = None) -> dict:
    try:
        data = loads_ordered(extract_json_text(text, "{"))
    except json.JSONDecodeError as exc:
        raise MalformedTree(f"response is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedTree("top-level JSON value must be an object")
    return coerce_tree(data, warnings=warnings)


class TreeBuilder:
    """Incremental construction by path insertion (used by construction scripts)."""

    def __init__(self) -> None:
        self.root: dict = {}
        self.warnings: list[str] = []

    def insert(self, path: Sequence[str], value: Scalar) -> TreePath:
        if not path:
            raise ValueError("cannot insert at the root")
        node = self.root
        actual: list[str] = []
        for label in path[:-1]:
            child = node.get(label)
            if child is None or not is_internal(child):
                if label in node:
                    label = disambiguate(label, node)
                    self.warnings.append(f"label {path!r} collides with a leaf; renamed to {label!r}")
                node[label] = child = {}
            actual.append(label)
            node = child
        last = path[-1]
        if last in node:
            new = disambiguate(last, node)
            self.warnings.append(f"duplicate label {last!r} renamed to {new!r}")
            last = new
        node[last] = value
        actual.append(last)
        return tuple(actual)


def deep_merge(base: Tree, extra: Tree) -> Tree:
    """Add paths from ``extra`` without touching anything already in ``base``."""
    if not is_internal(base) or not is_internal(extra):
        return base
    out = dict(base)
    for label, child in extra.items():
        if label not in out:
            out[label] = child
        elif is_internal(out[label]) and is_internal(child):
            out[label] = deep_merge(out[label], child)
    return out


def render_path(path: Sequence[str], value: Any = None, *, leaf: bool = False) -> str:
    text = " / ".join(path)
    if leaf:
        text += ": " + ("null" if value is None else str(value))
    return text


def dumps_tree(t: Tree, *, indent: int | None = None) -> str:
    if indent is None:
        return json.dumps(t, ensure_ascii=False, separators=(",", ":"))
    return json.dumps(t, ensure_ascii=False, indent=indent)


# -- cache --------------------------------------------------------------------


@dataclass
class CacheDocument:
    tree: Tree
    header: dict = field(default_factory=dict)


def serialize_cache(t: Tree, header: dict | None = None) -> bytes:
    doc = {"format": CACHE_FORMAT, "header": header or {}, "tree": t}
    return json.dumps(doc, ensure_ascii=False, indent=2, allow_nan=False).encode("utf-8")


def read_cache(data: bytes | str) -> CacheDocument:
    """Decode a cache envelope; a bare JSON tree is accepted with an empty header."""
    try:
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        doc = json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedCache(str(exc)) from exc
    if isinstance(doc, dict) and doc.get("format") == CACHE_FORMAT:
        if "tree" not in doc or not isinstance(doc.get("header", {}), dict):
            raise MalformedCache("cache envelope missing tree or header")
        return CacheDocument(doc["tree"], doc.get("header", {}))
    if not isinstance(doc, dict):
        raise MalformedCache("cache document must be a JSON object")
    return CacheDocument(doc, {})


def deserialize_cache(data: bytes | str) -> Tree:
    return read_cache(data).tree
