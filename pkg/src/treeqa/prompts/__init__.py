"""Prompt templates shipped as package resources.

Templates use ``{SLOT}`` markers filled by plain substitution, so literal
JSON braces inside a template need no escaping.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

_SLOT_RE = re.compile(r"\{\$?[A-Za-z_][A-Za-z0-9_]*\}")


@lru_cache(maxsize=None)
def load(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.txt").read_text(encoding="utf-8")


def slots(name: str) -> set[str]:
    return {m.group(0)[1:-1] for m in _SLOT_RE.finditer(load(name))}


def render(name: str, **values: object) -> str:
    """Fill the named slots; unknown slot names raise ``KeyError``."""
    known = slots(name)
    for key in values:
        if key not in known:
            raise KeyError(f"template {name!r} has no slot {key!r}")

    def fill(m: re.Match) -> str:
        key = m.group(0)[1:-1]
        return str(values[key]) if key in values else m.group(0)

    # one pass, so slot markers inside substituted values stay literal
    return _SLOT_RE.sub(fill, load(name))
