"""Textual reasoning by navigating the semantic tree.

Two traversals share an evidence context that only ever holds subtrees
fetched from the tree itself:

* leaf-to-root ranks leaves against the question, lets the model keep the
  relevant ones and then widens each kept path one level at a time until
  the model says the evidence suffices;
* root-to-leaf descends depth-first from the root, letting the model pick
  which children to open, guided by the top-ranked full paths, and stops
  at the first leaf after which the evidence suffices.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from . import prompts
from .gateway import Gateway, Phase, cosine
from .errors import ZeroVector
from .tree import LeafEntry, Tree, TreePath, dumps_tree, get_data, height, is_internal, iter_leaves, render_path, skeleton

log = logging.getLogger(__name__)


class NavigationDirection(str, Enum):
    ROOT_TO_LEAF = "RootToLeaf"
    LEAF_TO_ROOT = "LeafToRoot"

    @classmethod
    def parse(cls, text: str) -> "NavigationDirection":
        key = text.strip().lower().replace("-", "").replace("_", "")
        aliases = {"r2l": cls.ROOT_TO_LEAF, "roottoleaf": cls.ROOT_TO_LEAF, "l2r": cls.LEAF_TO_ROOT, "leaftoroot": cls.LEAF_TO_ROOT}
        if key not in aliases:
            raise ValueError(f"unknown direction {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class TraversalConfig:
    k1: int = 50
    k2: int = 5
    k_max: int = 5
    use_embeddings: bool = True

    def __post_init__(self) -> None:
        if self.k1 < 1 or self.k2 < 1 or self.k_max < 0:
            raise ValueError("k1 and k2 must be at least 1 and k_max non-negative")


@dataclass(frozen=True)
class EvidenceEntry:
    path: TreePath
    value: Tree
    provenance: str

    def render(self) -> str:
        label = render_path(self.path) if self.path else "(root)"
        return f"{label}: {json.dumps(self.value, ensure_ascii=False)}"


class EvidenceContext:
    """Ordered evidence with no entry nested inside another."""

    def __init__(self) -> None:
        self.entries: list[EvidenceEntry] = []

    def add(self, path: Sequence[str], value: Tree, provenance: str) -> bool:
        """Insert a subtree; returns False when an existing entry already covers it."""
        path = tuple(path)
        for e in self.entries:
            if path[: len(e.path)] == e.path:
                return False
        self.entries = [e for e in self.entries if e.path[: len(path)] != path]
        self.entries.append(EvidenceEntry(path, value, provenance))
        return True

    @property
    def paths(self) -> list[TreePath]:
        return [e.path for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def render(self) -> str:
        return "\n".join(e.render() for e in self.entries) if self.entries else "(no evidence)"

    def to_list(self) -> list[dict]:
        return [{"path": list(e.path), "value": e.value, "provenance": e.provenance} for e in self.entries]


@dataclass(frozen=True)
class GuidanceSet:
    paths: tuple[TreePath, ...]
    prefixes: frozenset[TreePath]

    @classmethod
    def from_paths(cls, paths: Sequence[TreePath]) -> "GuidanceSet":
        prefixes = {p[:i] for p in paths for i in range(len(p) + 1)}
        return cls(tuple(paths), frozenset(prefixes))

    def covers(self, path: TreePath) -> bool:
        return path in self.prefixes


@dataclass
class TraversalResult:
    answer: str
    direction: NavigationDirection
    context: EvidenceContext
    ready: bool
    trace: list[dict] = field(default_factory=list)
    visited: list[TreePath] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "answer": self.answer,
            "direction": self.direction.value,
            "ready": self.ready,
            "visited": [list(p) for p in self.visited],
            "evidence": self.context.to_list(),
            "trace": self.trace,
        }


# -- helpers ------------------------------------------------------------------


def prune_path(p: Sequence[str], k: int) -> TreePath:
    """Drop the last ``k`` labels; the empty path stands for the root."""
    if k < 0:
        raise ValueError("k must be non-negative")
    p = tuple(p)
    return p[: len(p) - min(k, len(p))]


def rank_indices(items: Sequence[str], query: str, gateway: Gateway, k: int, *, use_embeddings: bool = True) -> list[int]:
    if k < 1:
        raise ValueError("k must be at least 1")
    if not use_embeddings:
        return list(range(min(k, len(items))))
    if not items:
        return []
    vectors = gateway.embed([query, *items])
    q, rest = vectors[0], vectors[1:]
    scores = []
    for i, v in enumerate(rest):
        try:
            scores.append((-cosine(q, v), i))
        except ZeroVector:
            scores.append((0.0, i))
    return [i for _, i in sorted(scores)[:k]]


def rank_by_similarity(items: Sequence[str], query: str, gateway: Gateway, k: int, *, use_embeddings: bool = True) -> list[str]:
    """Top-k items by cosine similarity to the query, ties in original order."""
    return [items[i] for i in rank_indices(items, query, gateway, k, use_embeddings=use_embeddings)]


def _json_array(text: str):
    m = re.search(r"\[.*?\]", text, re.S)
    if not m:
        return None
    try:
        data = json.loads(m.group(0))
    except json.JSONDecodeError:
        return None
    return data if isinstance(data, list) else None


def parse_check(text: str) -> tuple[bool, str]:
    """``READY`` then the answer, or anything else for "continue"."""
    lines = [ln.strip() for ln in text.strip().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        return False, ""
    head = lines[0]
    m = re.match(r"^\W*ready\b[\s:,\-]*(.*)$", head, re.I)
    if not m:
        return False, ""
    answer = "\n".join([m.group(1)] + lines[1:]).strip() if m.group(1) else "\n".join(lines[1:]).strip()
    return (True, answer) if answer else (False, "")


def determine_direction(t: Tree, question: str, gateway: Gateway) -> NavigationDirection:
    user = prompts.render("direction", SKELETON=dumps_tree(skeleton(t)), QUESTION=question)
    reply = gateway.ask(Phase.NAVIGATION, user, purpose="direction").upper()
    has_l2r = "LEAF_TO_ROOT" in reply or "LEAFTOROOT" in reply
    has_r2l = "ROOT_TO_LEAF" in reply or "ROOTTOLEAF" in reply
    if has_l2r and not has_r2l:
        return NavigationDirection.LEAF_TO_ROOT
    if not has_r2l:
        log.warning("unparseable direction %r; defaulting to root-to-leaf", reply[:80])
    return NavigationDirection.ROOT_TO_LEAF


def _check(ctx: EvidenceContext, question: str, gateway: Gateway) -> tuple[bool, str]:
    reply = gateway.ask(Phase.NAVIGATION, prompts.render("check", CONTEXT=ctx.render(), QUESTION=question), purpose="check")
    return parse_check(reply)


def _generate(ctx: EvidenceContext, question: str, gateway: Gateway) -> str:
    reply = gateway.ask(Phase.NAVIGATION, prompts.render("generate", CONTEXT=ctx.render(), QUESTION=question), purpose="generate")
    return reply.strip()


def _leaf_entries(t: Tree) -> list[LeafEntry]:
    return [e for e in iter_leaves(t) if e.path] if is_internal(t) else []


# -- leaf to root -------------------------------------------------------------


def _filter(entries: list[LeafEntry], shortlist: list[int], question: str, gateway: Gateway) -> list[int]:
    lines = [f"{n}. {render_path(entries[i].path, entries[i].value, leaf=True)}" for n, i in enumerate(shortlist)]
    reply = gateway.ask(Phase.NAVIGATION, prompts.render("filter", CANDIDATES="\n".join(lines), QUESTION=question), purpose="filter")
    picked = _json_array(reply)
    if picked is None:
        log.warning("unparseable relevance filter; keeping the whole shortlist")
        return shortlist
    out = []
    for x in picked:
        if isinstance(x, int) and not isinstance(x, bool) and 0 <= x < len(shortlist) and shortlist[x] not in out:
            out.append(shortlist[x])
    return out


def leaf_to_root(t: Tree, question: str, gateway: Gateway, cfg: TraversalConfig | None = None) -> TraversalResult:
    cfg = cfg or TraversalConfig()
    direction = NavigationDirection.LEAF_TO_ROOT
    entries = _leaf_entries(t)
    ctx = EvidenceContext()
    trace: list[dict] = []
    texts = [render_path(e.path, e.value, leaf=True) for e in entries]
    shortlist = rank_indices(texts, question, gateway, cfg.k1, use_embeddings=cfg.use_embeddings) if entries else []
    trace.append({"step": "rank", "shortlist": [list(entries[i].path) for i in shortlist]})
    relevant = _filter(entries, shortlist, question, gateway) if shortlist else []
    trace.append({"step": "filter", "relevant": [list(entries[i].path) for i in relevant]})
    if relevant:
        for k in range(min(cfg.k_max, height(t)) + 1):
            for i in relevant:
                sub = prune_path(entries[i].path, k)
                ctx.add(sub, get_data(t, sub), f"leaf-to-root k={k}")
            ready, answer = _check(ctx, question, gateway)
            trace.append({"step": "check", "k": k, "context": [list(p) for p in ctx.paths], "ready": ready})
            if ready:
                return TraversalResult(answer, direction, ctx, True, trace)
    answer = _generate(ctx, question, gateway)
    trace.append({"step": "generate"})
    return TraversalResult(answer, direction, ctx, False, trace)


# -- root to leaf -------------------------------------------------------------


def _select(t: Tree, path: TreePath, node: dict, guidance: GuidanceSet, question: str, gateway: Gateway) -> list[str]:
    labels = list(node)
    rows = []
    for n, label in enumerate(labels):
        child = node[label]
        hint = f"({len(child)} children)" if is_internal(child) else f": {json.dumps(child, ensure_ascii=False)}"
        rows.append(f"{n}. {label} {hint}")
    user = prompts.render(
        "select",
        NODE=render_path(path) if path else "(root)",
        CHILDREN="\n".join(rows),
        GUIDANCE="\n".join(render_path(p) for p in guidance.paths) or "(none)",
        QUESTION=question,
    )
    reply = gateway.ask(Phase.NAVIGATION, user, purpose="select")
    picked = _json_array(reply)
    if picked is None:
        log.warning("unparseable child selection at %r; following guidance", path)
        return [label for label in labels if guidance.covers(path + (label,))]
    out = []
    for x in picked:
        label = None
        if isinstance(x, int) and not isinstance(x, bool) and 0 <= x < len(labels):
            label = labels[x]
        elif isinstance(x, str) and x in node:
            label = x
        if label is not None and label not in out:
            out.append(label)
    return out


def root_to_leaf(t: Tree, question: str, gateway: Gateway, cfg: TraversalConfig | None = None) -> TraversalResult:
    cfg = cfg or TraversalConfig()
    direction = NavigationDirection.ROOT_TO_LEAF
    entries = _leaf_entries(t)
    texts = [render_path(e.path, e.value, leaf=True) for e in entries]
    top = rank_indices(texts, question, gateway, cfg.k2, use_embeddings=cfg.use_embeddings) if entries else []
    guidance = GuidanceSet.from_paths([entries[i].path for i in top])
    ctx = EvidenceContext()
    trace: list[dict] = [{"step": "guidance", "paths": [list(p) for p in guidance.paths]}]
    visited: list[TreePath] = []
    stack: list[TreePath] = [()]
    while stack:
        path = stack.pop()
        node = get_data(t, path)
        visited.append(path)
        if is_internal(node):
            chosen = _select(t, path, node, guidance, question, gateway) if node else []
            trace.append({"step": "select", "node": list(path), "chosen": chosen})
            for label in reversed(chosen):
                stack.append(path + (label,))
            continue
        ctx.add(path, node, "root-to-leaf")
        ready, answer = _check(ctx, question, gateway)
        trace.append({"step": "check", "node": list(path), "ready": ready})
        if ready:
            return TraversalResult(answer, direction, ctx, True, trace, visited)
    answer = _generate(ctx, question, gateway)
    trace.append({"step": "generate"})
    return TraversalResult(answer, direction, ctx, False, trace, visited)


def answer_textual(
    t: Tree,
    question: str,
    gateway: Gateway,
    cfg: TraversalConfig | None = None,
    *,
    force_direction: NavigationDirection | None = None,
) -> TraversalResult:
    """Pick a direction (or honour the override) and run that traversal."""
    direction = force_direction or determine_direction(t, question, gateway)
    run = leaf_to_root if direction is NavigationDirection.LEAF_TO_ROOT else root_to_leaf
    return run(t, question, gateway, cfg)
