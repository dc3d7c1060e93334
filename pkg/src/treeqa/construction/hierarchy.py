"""Hierarchy identification: which headers form the tree backbone."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .. import prompts
from ..errors import SchemaInvalid
from ..gateway import Gateway, Phase
from ..table import Grid, iter_rows_json
from ..tree import extract_json_text
from .headers import NormalizedHeaders

log = logging.getLogger(__name__)

HIERARCHY_SAMPLE_ROWS = 50
TABLE_TYPES = ("simple", "complex")


@dataclass(frozen=True)
class HierarchySchema:
    table_type: str
    analysis_reason: str
    hierarchy_keys: tuple[str, ...]
    value_leaves: tuple[str, ...]
    semantic_groups: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def violations(self, headers: NormalizedHeaders) -> list[str]:
        """Every way this schema breaks the header partition rule."""
        problems = []
        known = set(headers.headers)
        if self.table_type not in TABLE_TYPES:
            problems.append(f"table_type must be 'simple' or 'complex', got {self.table_type!r}")
        keys, leaves = list(self.hierarchy_keys), list(self.value_leaves)
        for name, items in (("hierarchy_keys", keys), ("value_leaves", leaves)):
            dupes = sorted({x for x in items if items.count(x) > 1})
            if dupes:
                problems.append(f"{name} repeats {dupes}")
        both = sorted(set(keys) & set(leaves))
        if both:
            problems.append(f"headers in both hierarchy_keys and value_leaves: {both}")
        extra = [x for x in keys + leaves if x not in known]
        if extra:
            problems.append(f"unknown headers: {extra}")
        missing = [h for h in headers.headers if h not in set(keys) | set(leaves)]
        if missing:
            problems.append(f"headers missing from the partition: {missing}")
        for group, members in self.semantic_groups.items():
            stray = [m for m in members if m not in known]
            if stray:
                problems.append(f"semantic group {group!r} has unknown members {stray}")
        return problems

    def to_dict(self) -> dict:
        return {
            "table_type": self.table_type,
            "analysis_reason": self.analysis_reason,
            "hierarchy_keys": list(self.hierarchy_keys),
            "value_leaves": list(self.value_leaves),
            "semantic_groups": {k: list(v) for k, v in self.semantic_groups.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HierarchySchema":
        groups = data.get("semantic_groups") or {}
        if not isinstance(groups, dict):
            raise SchemaInvalid("semantic_groups must be an object")

        def strings(value, name):
            if not isinstance(value, list):
                raise SchemaInvalid(f"{name} must be a list")
            return tuple(str(x) for x in value)

        return cls(
            table_type=str(data.get("table_type", "")).strip().lower(),
            analysis_reason=str(data.get("analysis_reason", "")),
            hierarchy_keys=strings(data.get("hierarchy_keys", []), "hierarchy_keys"),
            value_leaves=strings(data.get("value_leaves", []), "value_leaves"),
            semantic_groups={str(k): strings(v, f"semantic group {k!r}") for k, v in groups.items()},
        )


def default_schema(headers: NormalizedHeaders) -> HierarchySchema:
    """Flat fallback: the first column keys the rows, everything else is a value."""
    return HierarchySchema(
        table_type="simple",
        analysis_reason="fallback: first column as row key",
        hierarchy_keys=headers.headers[:1],
        value_leaves=headers.headers[1:],
    )


def parse_schema(text: str, headers: NormalizedHeaders) -> HierarchySchema:
    try:
        data = json.loads(extract_json_text(text, "{"))
    except json.JSONDecodeError as exc:
        raise SchemaInvalid(f"hierarchy response is not JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaInvalid("hierarchy response must be a JSON object")
    schema = HierarchySchema.from_dict(data)
    problems = schema.violations(headers)
    if problems:
        raise SchemaInvalid("; ".join(problems))
    return schema


def identify_hierarchy(
    g: Grid,
    h: NormalizedHeaders,
    gateway: Gateway,
    *,
    feedback: str = "",
    sample_rows: int = HIERARCHY_SAMPLE_ROWS,
) -> HierarchySchema:
    """Ask for the hierarchy schema; one repair re-prompt lists the violations."""
    prompt = prompts.render(
        "hid",
        TABLE_AS_JSON_STRING=iter_rows_json(g.to_rows()[:sample_rows]),
        NORMALIZED_HEADERS_FROM_STEP_1=json.dumps(list(h.headers), ensure_ascii=False),
    )
    if feedback:
        prompt += "\n\n[Feedback On The Previous Tree]:\n" + feedback
    problem = None
    for attempt in range(2):
        user = prompt if problem is None else prompt + "\n\n" + prompts.render("repair", PROBLEM=problem)
        reply = gateway.ask(Phase.CONSTRUCTION, user, purpose="hid")
        try:
            return parse_schema(reply, h)
        except SchemaInvalid as exc:
            problem = str(exc)
            log.warning("hierarchy identification attempt %d invalid: %s", attempt + 1, exc)
    raise SchemaInvalid(f"hierarchy schema still invalid after repair: {problem}")
