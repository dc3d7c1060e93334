"""Tree quality against the source grid: information coverage and structural integrity.

Matching works on normalized text (trimmed, whitespace-collapsed,
case-folded, unit symbols stripped from the ends). Numbers also match by
value, so a JSON leaf ``2500`` finds the cell ``"2,500"``.

Structural integrity walks every leaf path bottom-up. A label is aligned
when one of its cell occurrences shares a row or column with the leaf
anchor, or failing that with the nearest located node below it. Labels
that occur nowhere in the grid (group names, wrapper keys) are skipped;
qualified keys ``"Header - Value"`` are located through their parts.
Empty and null leaves are anchored at the grid's empty cells.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .numeric import format_number, normalize_number
from .table import CellAddress, Grid, is_blank
from .tree import QUALIFIED_SEP, LeafEntry, Tree, TreePath, is_internal, iter_leaves

UNIT_TOKENS = ("¢", "%", "$")
_DISAMBIG_RE = re.compile(r" #\d+$")


def normalize_text(value: object, units: tuple[str, ...] = UNIT_TOKENS) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        text = "true" if value else "false"
    elif isinstance(value, (int, float)):
        text = format_number(value)
    else:
        text = str(value)
    text = " ".join(text.split()).casefold()
    changed = True
    while changed and text:
        changed = False
        for u in units:
            if text.startswith(u):
                text, changed = text[len(u):].strip(), True
            if text.endswith(u):
                text, changed = text[: -len(u)].strip(), True
    return text


def _numeric_key(value: object) -> str | None:
    n = normalize_number(value)
    return None if n is None else format_number(float(n))


class CorrectionAction(str, Enum):
    ACCEPT = "Accept"
    REBUILD_HIERARCHY = "RebuildHierarchy"
    SUPPLEMENT_COVERAGE = "SupplementCoverage"


@dataclass(frozen=True)
class RefinementConfig:
    coverage_threshold: float = 0.8
    structure_threshold: float = 0.7
    max_attempts: int = 3

    def __post_init__(self) -> None:
        for t in (self.coverage_threshold, self.structure_threshold):
            if not 0 < t <= 1:
                raise ValueError("thresholds must lie in (0, 1]")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")


class CellIndex:
    """Where each normalized cell text (and numeric value) occurs in the grid.

    With ``infer_merged`` an empty cell also counts as an occurrence of the
    nearest non-empty cell to its left and of the nearest one above it,
    which approximates unannotated merged spans.
    """

    def __init__(self, grid: Grid, *, infer_merged: bool = True):
        self.grid = grid
        self.by_text: dict[str, list[CellAddress]] = defaultdict(list)
        self.by_number: dict[str, list[CellAddress]] = defaultdict(list)
        for addr, text in grid.iter_cells():
            if is_blank(text):
                self.by_text[""].append(addr)
                continue
            self._add(text, addr)
        if infer_merged:
            self._infer_spans()

    def _add(self, text: str, addr: CellAddress) -> None:
        self.by_text[normalize_text(text)].append(addr)
        key = _numeric_key(text)
        if key is not None:
            self.by_number[key].append(addr)

    def _infer_spans(self) -> None:
        g = self.grid
        for r in range(g.rows):
            for c in range(g.cols):
                if not is_blank(g[r, c]):
                    continue
                addr = CellAddress(r, c)
                for cc in range(c - 1, -1, -1):
                    if not is_blank(g[r, cc]):
                        self.by_text[normalize_text(g[r, cc])].append(addr)
                        break
                for rr in range(r - 1, -1, -1):
                    if not is_blank(g[rr, c]):
                        self.by_text[normalize_text(g[rr, c])].append(addr)
                        break

    def lookup(self, value: object) -> list[CellAddress]:
        text = normalize_text(value)
        hits = self.by_text.get(text)
        if hits:
            return hits
        if text:
            key = _numeric_key(value if not isinstance(value, str) else value.strip())
            if key is not None:
                return self.by_number.get(key, [])
        return []

    def label_occurrences(self, label: str) -> list[CellAddress]:
        label = _DISAMBIG_RE.sub("", label)
        hits = self.lookup(label) if label.strip() else []
        if hits or QUALIFIED_SEP not in label:
            return hits
        out: list[CellAddress] = []
        for part in label.split(QUALIFIED_SEP):
            if part.strip():
                out.extend(self.lookup(part))
        return out


def _aligned(a: Iterable[CellAddress], b: Iterable[CellAddress]) -> bool:
    b = list(b)
    rows = {x.row for x in b}
    cols = {x.col for x in b}
    return any(x.row in rows or x.col in cols for x in a)


def verify_path(entry: LeafEntry, idx: CellIndex, *, root_exempt: bool = False) -> tuple[bool, str | None]:
    """Bottom-up alignment check of one leaf path; returns (valid, failing label).

    With ``root_exempt`` the first label is the tree's root node and is not checked.
    """
    anchor = idx.lookup(entry.value) if entry.value not in (None, "") else idx.by_text.get("", [])
    below = anchor
    labels = entry.path[1:] if root_exempt else entry.path
    for label in reversed(labels):
        occ = idx.label_occurrences(label)
        if not occ:
            continue
        if _aligned(occ, anchor) or _aligned(occ, below):
            below = occ
            continue
        return False, label
    return True, None


def _tree_texts(t: Tree) -> list[str]:
    texts: list[str] = []

    def walk(node: Tree) -> None:
        if is_internal(node):
            for label, child in node.items():
                texts.append(label)
                walk(child)
        elif node is not None:
            texts.append(node if isinstance(node, str) else format_number(node) if isinstance(node, (int, float)) and not isinstance(node, bool) else str(node))

    walk(t)
    return texts


def coverage(t: Tree, g: Grid) -> tuple[float, list[CellAddress]]:
    """Fraction of non-empty cells whose text appears somewhere in the tree."""
    cells = g.nonempty()
    if not cells:
        return 1.0, []
    raw = _tree_texts(t)
    exact = {normalize_text(x) for x in raw}
    numbers = {k for k in (_numeric_key(x) for x in raw) if k is not None}
    haystack = "\n".join(sorted(exact))
    unmapped = []
    found: dict[str, bool] = {}
    for addr, text in cells:
        norm = normalize_text(text)
        if norm not in found:
            hit = norm in exact or (_numeric_key(text) in numbers)
            if not hit and norm:
                pattern = r"(?<![\w.])" + re.escape(norm) + r"(?![\w.])"
                hit = re.search(pattern, haystack) is not None
            found[norm] = hit
        if not found[norm]:
            unmapped.append(addr)
    return (len(cells) - len(unmapped)) / len(cells), unmapped


def structural_integrity(
    t: Tree, g: Grid, idx: CellIndex | None = None
) -> tuple[float, list[tuple[TreePath, str]], bool]:
    """Valid leaf paths over all leaf paths; the flag marks a tree with no leaves."""
    idx = idx or CellIndex(g)
    entries = [e for e in iter_leaves(t) if e.path] if is_internal(t) else []
    if not entries:
        return 0.0, [], True
    # a single top-level key is the root node, exempt like the implicit root
    single_root = len(t) == 1
    broken = []
    for e in entries:
        ok, label = verify_path(e, idx, root_exempt=single_root)
        if not ok:
            broken.append((e.path, label))
    return (len(entries) - len(broken)) / len(entries), broken, False


@dataclass
class QualityReport:
    coverage: float
    integrity: float
    unmapped_cells: list[CellAddress] = field(default_factory=list)
    broken_paths: list[tuple[TreePath, str]] = field(default_factory=list)
    action: CorrectionAction = CorrectionAction.ACCEPT
    empty_tree: bool = False
    leaf_count: int = 0

    @property
    def average(self) -> float:
        return (self.coverage + self.integrity) / 2

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "integrity": self.integrity,
            "action": self.action.value,
            "empty_tree": self.empty_tree,
            "leaf_count": self.leaf_count,
            "unmapped_cells": [a.to_a1() for a in self.unmapped_cells],
            "broken_paths": [{"path": list(p), "label": label} for p, label in self.broken_paths],
        }


def route_correction(report: QualityReport, cfg: RefinementConfig) -> CorrectionAction:
    if report.integrity < cfg.structure_threshold:
        return CorrectionAction.REBUILD_HIERARCHY
    if report.coverage < cfg.coverage_threshold:
        return CorrectionAction.SUPPLEMENT_COVERAGE
    return CorrectionAction.ACCEPT


def evaluate(t: Tree, g: Grid, cfg: RefinementConfig | None = None, *, infer_merged: bool = True) -> QualityReport:
    cfg = cfg or RefinementConfig()
    cov, unmapped = coverage(t, g)
    idx = CellIndex(g, infer_merged=infer_merged)
    integ, broken, empty = structural_integrity(t, g, idx)
    report = QualityReport(
        coverage=cov,
        integrity=integ,
        unmapped_cells=unmapped,
        broken_paths=broken,
        empty_tree=empty,
        leaf_count=sum(1 for _ in iter_leaves(t)) if is_internal(t) else 0,
    )
    report.action = route_correction(report, cfg)
    return report
