"""Scalar-to-number normalization used by aggregation and answer matching."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_NUMBER_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")
_GROUPED_RE = re.compile(r"^[+-]?\d{1,3}(?:,\d{3})+(?:\.\d*)?$")


@dataclass(frozen=True)
class NumericNormalizer:
    """Turns cell-style text into numbers; anything else becomes ``None``.

    ``"(4.5)"`` is read as -4.5, thousands commas are dropped, and the
    configured unit tokens are stripped from either end.
    """

    units: tuple[str, ...] = ("¢", "%", "$")
    extra_units: tuple[str, ...] = field(default=())

    def __call__(self, value: object) -> int | float | None:
        if value is None or isinstance(value, bool):
            return None
        if isinstance(value, (int, float)):
            return value
        if not isinstance(value, str):
            return None
        text = value.strip().replace("−", "-")
        negative = False
        if len(text) >= 2 and text[0] == "(" and text[-1] == ")":
            negative = True
            text = text[1:-1].strip()
        text = self._strip_units(text)
        if text.startswith("(") and text.endswith(")") and not negative:
            negative = True
            text = self._strip_units(text[1:-1].strip())
        if _GROUPED_RE.match(text):
            text = text.replace(",", "")
        if not _NUMBER_RE.match(text):
            return None
        if re.fullmatch(r"[+-]?\d+", text):
            number: int | float = int(text)
        else:
            number = float(text)
        return -number if negative else number

    def _strip_units(self, text: str) -> str:
        units = self.units + self.extra_units
        changed = True
        while changed and text:
            changed = False
            for u in units:
                if text.startswith(u):
                    text, changed = text[len(u):].strip(), True
                if text.endswith(u):
                    text, changed = text[: -len(u)].strip(), True
        return text


normalize_number = NumericNormalizer()


def is_numeric(value: object) -> bool:
    return normalize_number(value) is not None


def format_number(x: float | int) -> str:
    """Render a result number without float noise (3685.4504999999998 -> 3685.4505)."""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if x != x or x in (float("inf"), float("-inf")):
        return str(x)
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".12g")
