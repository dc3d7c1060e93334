"""Grid model, A1 addressing, compact serialization and token statistics.

The grid is the source of truth for every quality metric, so cell text is
kept verbatim: no trimming, no type coercion beyond turning JSON scalars
into strings at ingestion.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Protocol, Sequence

from .errors import EmptyInput, InvalidAddress

_A1_RE = re.compile(r"^([A-Z]{1,3})([1-9][0-9]*)$")


def is_blank(text: str) -> bool:
    """A cell counts as empty when it holds nothing but whitespace."""
    return not text.strip()


# -- addressing ---------------------------------------------------------------


def column_letters(col: int) -> str:
    """Zero-based column index to bijective base-26 letters (0 -> A, 26 -> AA)."""
    if col < 0:
        raise InvalidAddress(f"negative column {col}")
    letters = []
    n = col + 1
    while n:
        n, rem = divmod(n - 1, 26)
        letters.append(chr(ord("A") + rem))
    return "".join(reversed(letters))


def column_index(letters: str) -> int:
    """Inverse of :func:`column_letters`."""
    if not letters or not letters.isascii() or not letters.isalpha() or not letters.isupper():
        raise InvalidAddress(f"bad column letters {letters!r}")
    n = 0
    for ch in letters:
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n - 1


@dataclass(frozen=True, order=True)
class CellAddress:
    row: int
    col: int

    def __post_init__(self) -> None:
        if self.row < 0 or self.col < 0:
            raise InvalidAddress(f"negative address ({self.row}, {self.col})")

    def to_a1(self) -> str:
        return f"{column_letters(self.col)}{self.row + 1}"

    @classmethod
    def from_a1(cls, text: str) -> "CellAddress":
        m = _A1_RE.match(text)
        if m is None:
            raise InvalidAddress(f"not an A1 reference: {text!r}")
        return cls(row=int(m.group(2)) - 1, col=column_index(m.group(1)))

    def __str__(self) -> str:
        return self.to_a1()


def to_a1(addr: CellAddress) -> str:
    return addr.to_a1()


def from_a1(text: str) -> CellAddress:
    return CellAddress.from_a1(text)


def looks_like_a1(text: str) -> bool:
    return isinstance(text, str) and _A1_RE.match(text) is not None


# -- grid ---------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Immutable rectangular matrix of cell texts ("" marks an empty cell)."""

    cells: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.cells:
            raise EmptyInput("grid has no rows")
        width = len(self.cells[0])
        if any(len(r) != width for r in self.cells):
            raise ValueError("grid rows must all have the same width")

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.cells[0])

    def __getitem__(self, addr: CellAddress | tuple[int, int]) -> str:
        if isinstance(addr, CellAddress):
            return self.cells[addr.row][addr.col]
        r, c = addr
        return self.cells[r][c]

    def contains(self, addr: CellAddress) -> bool:
        return addr.row < self.rows and addr.col < self.cols

    def cell(self, a1: str) -> str:
        return self[CellAddress.from_a1(a1)]

    def iter_cells(self) -> Iterator[tuple[CellAddress, str]]:
        for r, row in enumerate(self.cells):
            for c, text in enumerate(row):
                yield CellAddress(r, c), text

    def nonempty(self) -> list[tuple[CellAddress, str]]:
        return [(a, t) for a, t in self.iter_cells() if not is_blank(t)]

    def to_rows(self) -> list[list[str]]:
        return [list(r) for r in self.cells]


def _cell_text(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return json.dumps(value)
    raise TypeError(f"unsupported cell value {value!r}")


def parse_grid(raw: Sequence[Sequence[object]]) -> Grid:
    """Build a rectangular grid, padding short rows with empty cells."""
    if not raw:
        raise EmptyInput("table has zero rows")
    width = max(len(r) for r in raw)
    rows = []
    for r in raw:
        texts = [_cell_text(v) for v in r]
        texts.extend([""] * (width - len(texts)))
        rows.append(tuple(texts))
    if width == 0:
        raise EmptyInput("table has zero columns")
    return Grid(tuple(rows))


def load_grid(path: str | Path) -> Grid:
    """Read a grid from a ``.json`` array-of-arrays or a ``.csv`` file.

    CSV follows RFC 4180 quoting (double-quote fields containing commas,
    quotes or newlines; embedded quotes are doubled).
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        return parse_grid(list(csv.reader(io.StringIO(text, newline=""))))
    data = json.loads(text)
    if isinstance(data, dict) and "table" in data:
        data = data["table"]
    return parse_grid(data)


# -- serialization ------------------------------------------------------------


def compact_serialize(g: Grid) -> str:
    """Nested-list JSON with no insignificant whitespace.

    JSON string escaping makes this injective; ``json.loads`` inverts it.
    """
    return json.dumps([list(r) for r in g.cells], ensure_ascii=False, separators=(",", ":"))


def coordinate_view(g: Grid, *, max_rows: int | None = None) -> str:
    """One ``"<A1>: <text>"`` line per non-empty cell, row-major."""
    lines = []
    for addr, text in g.iter_cells():
        if max_rows is not None and addr.row >= max_rows:
            break
        if not is_blank(text):
            lines.append(f"{addr.to_a1()}: {text}")
    return "\n".join(lines)


# -- tokens -------------------------------------------------------------------


class TokenCounter(Protocol):
    def __call__(self, text: str) -> int: ...


_WORD_RE = re.compile(r"\w+|[^\w\s]")


class WordTokenCounter:
    """Word-and-punctuation count scaled by a fixed factor (default 1.3)."""

    def __init__(self, factor: float = 1.3):
        if factor <= 0:
            raise ValueError("factor must be positive")
        self.factor = factor

    def __call__(self, text: str) -> int:
        n = len(_WORD_RE.findall(text))
        return math.ceil(n * self.factor) if n else 0


class CharTokenCounter:
    """One token per character; handy for hand-checkable arithmetic."""

    def __call__(self, text: str) -> int:
        return len(text)


DEFAULT_COUNTER = WordTokenCounter()


@dataclass(frozen=True)
class TableStats:
    total_tokens: int
    avg_cell_tokens: float
    long_cell_ratio: float
    cell_count: int
    nonempty_count: int
    no_content: bool = False


def compute_stats(g: Grid, tk: TokenCounter = DEFAULT_COUNTER, gamma: float = 80) -> TableStats:
    """Token footprint, mean cell length and long-cell ratio over non-empty cells.

    An all-empty grid reports zero for the per-cell statistics and sets
    ``no_content``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    counts = [tk(t) for _, t in g.nonempty()]
    total = tk(compact_serialize(g))
    n = g.rows * g.cols
    if not counts:
        return TableStats(total, 0.0, 0.0, n, 0, no_content=True)
    long_cells = sum(1 for c in counts if c > gamma)
    return TableStats(
        total_tokens=total,
        avg_cell_tokens=sum(counts) / len(counts),
        long_cell_ratio=long_cells / len(counts),
        cell_count=n,
        nonempty_count=len(counts),
    )


def iter_rows_json(rows: Iterable[Sequence[str]]) -> str:
    """Pretty-ish JSON for prompts: one table row per line."""
    body = ",\n".join(json.dumps(list(r), ensure_ascii=False) for r in rows)
    return "[\n" + body + "\n]"
