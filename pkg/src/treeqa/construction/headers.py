"""Header normalization: one qualified header per grid column."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .. import prompts
from ..errors import MalformedResponse
from ..gateway import Gateway, Phase
from ..numeric import is_numeric
from ..table import Grid, column_letters, is_blank, iter_rows_json
from ..tree import QUALIFIED_SEP, disambiguate, extract_json_text

log = logging.getLogger(__name__)

HEADER_SAMPLE_ROWS = 6


@dataclass(frozen=True)
class NormalizedHeaders:
    headers: tuple[str, ...]
    header_rows: int = 1
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.headers)

    def __iter__(self):
        return iter(self.headers)

    def __getitem__(self, i: int) -> str:
        return self.headers[i]


_YEAR_RE = re.compile(r"^(19|20)\d\d$")


def _is_data_row(g: Grid, r: int) -> bool:
    """A row with a numeric cell that is not a bare year label like ``2019``."""
    cells = [g[r, c].strip() for c in range(g.cols)]
    return any(is_numeric(t) and not _YEAR_RE.match(t) for t in cells)


def header_depth(g: Grid) -> int:
    """Leading rows before the first data row (at least 1)."""
    for r in range(g.rows):
        if _is_data_row(g, r):
            return max(1, r)
    return 1


def clean_headers(raw: list[str], cols: int) -> tuple[tuple[str, ...], list[str]]:
    """Fill empty entries and make every header unique."""
    warnings = []
    out: list[str] = []
    for c, text in enumerate(raw):
        text = " ".join(str(text).split())
        if not text:
            text = f"Column {column_letters(c)}"
            warnings.append(f"empty header for column {column_letters(c)} replaced by {text!r}")
        if text in out:
            new = disambiguate(text, out)
            warnings.append(f"duplicate header {text!r} renamed to {new!r}")
            text = new
        out.append(text)
    assert len(out) == cols
    return tuple(out), warnings


def stacked_headers(g: Grid, depth: int) -> list[str]:
    """Deterministic combination of the first ``depth`` rows, carrying spans rightwards."""
    levels: list[list[str]] = []
    for r in range(depth):
        row, carry = [], ""
        for c in range(g.cols):
            text = g[r, c].strip()
            if text:
                carry = text
            row.append(text or (carry if r < depth - 1 else ""))
        levels.append(row)
    out = []
    for c in range(g.cols):
        parts = [lv[c] for lv in levels if lv[c]]
        parts = [p for i, p in enumerate(parts) if i == 0 or p != parts[i - 1]]
        out.append(QUALIFIED_SEP.join(parts))
    return out


def _is_plain_header_row(g: Grid) -> bool:
    first = [g[0, c].strip() for c in range(g.cols)]
    if any(not t for t in first) or len(set(first)) != len(first) or any(is_numeric(t) for t in first):
        return False
    return g.rows == 1 or header_depth(g) == 1


def _parse_header_array(text: str, cols: int) -> list[str]:
    try:
        data = json.loads(extract_json_text(text, "["))
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"header response is not a JSON array: {exc}") from exc
    if not isinstance(data, list) or not all(isinstance(x, (str, int, float)) or x is None for x in data):
        raise MalformedResponse("header response must be a JSON array of strings")
    if len(data) != cols:
        raise MalformedResponse(f"expected {cols} headers, got {len(data)}")
    return ["" if x is None else str(x) for x in data]


def normalize_headers(g: Grid, gateway: Gateway, *, sample_rows: int = HEADER_SAMPLE_ROWS) -> NormalizedHeaders:
    """Ask the model for one header per column, re-prompting once on a bad answer.

    A grid whose first row is already a clean header row is passed through
    without a model call.
    """
    if g.rows < 1:
        raise MalformedResponse("grid has no rows")
    depth = header_depth(g)
    if _is_plain_header_row(g):
        headers, warnings = clean_headers([g[0, c] for c in range(g.cols)], g.cols)
        return NormalizedHeaders(headers, 1, tuple(warnings))

    rows = g.to_rows()[: max(sample_rows, depth + 1)]
    prompt = prompts.render("hin", TABLE_AS_JSON_STRING=iter_rows_json(rows))
    problem = None
    for attempt in range(2):
        user = prompt if problem is None else prompt + "\n\n" + prompts.render("repair", PROBLEM=problem)
        reply = gateway.ask(Phase.CONSTRUCTION, user, purpose="hin")
        try:
            raw = _parse_header_array(reply, g.cols)
        except MalformedResponse as exc:
            problem = str(exc)
            log.warning("header normalization attempt %d unusable: %s", attempt + 1, exc)
            continue
        headers, warnings = clean_headers(raw, g.cols)
        for w in warnings:
            log.warning(w)
        return NormalizedHeaders(headers, depth, tuple(warnings))
    raise MalformedResponse(f"header normalization failed after re-prompt: {problem}")
