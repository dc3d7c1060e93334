"""The three tree-synthesis strategies and the coverage supplement pass."""

from __future__ import annotations

import json
import logging
from typing import Sequence

from .. import prompts
from ..errors import InvalidAddress, MalformedTree, UnresolvedPlaceholder
from ..gateway import Gateway, Phase
from ..modes import SynthesisMode
from ..table import CellAddress, Grid, column_letters, coordinate_view, iter_rows_json, looks_like_a1
from ..tree import Tree, deep_merge, dumps_tree, is_internal, iter_leaves, parse_tree_text, resolves
from .headers import NormalizedHeaders
from .hierarchy import HierarchySchema
from .script import parse_script, run_script

log = logging.getLogger(__name__)

SCRIPT_PREVIEW_ROWS = 10
SUPPLEMENT_MAX_CELLS = 200


def _construction_prompt(table_text: str, h: NormalizedHeaders, schema: HierarchySchema) -> str:
    return prompts.render(
        "construction",
        TABLE_AS_JSON_STRING=table_text,
        NORMALIZED_HEADERS_FROM_STEP_1=json.dumps(list(h.headers), ensure_ascii=False),
        HIERARCHY_DEFINITION_FROM_STEP_2=json.dumps(schema.to_dict(), ensure_ascii=False, indent=2),
    )


def _with_feedback(prompt: str, feedback: str) -> str:
    if not feedback:
        return prompt
    return prompt + "\n\n[Feedback On The Previous Attempt]:\n" + feedback


def _require_tree(t: Tree) -> dict:
    if not is_internal(t) or not t:
        raise MalformedTree("synthesized tree is empty")
    return t


def synthesize_dsp(g: Grid, h: NormalizedHeaders, schema: HierarchySchema, gateway: Gateway, *, feedback: str = "") -> dict:
    """Direct generation: the model writes the whole tree."""
    prompt = _construction_prompt(iter_rows_json(g.to_rows()), h, schema)
    reply = gateway.ask(Phase.CONSTRUCTION, _with_feedback(prompt, feedback), purpose="construct-dsp")
    return _require_tree(parse_tree_text(reply))


def resolve_placeholders(skel: Tree, g: Grid, *, warnings: list[str] | None = None) -> Tree:
    """Replace every A1-address leaf with the addressed cell text.

    Leaves that are not addresses are kept as literals; an address outside
    the grid raises :class:`UnresolvedPlaceholder`.
    """
    if is_internal(skel):
        return {label: resolve_placeholders(child, g, warnings=warnings) for label, child in skel.items()}
    if isinstance(skel, str):
        text = skel.strip()
        if looks_like_a1(text):
            try:
                addr = CellAddress.from_a1(text)
            except InvalidAddress:
                addr = None
            if addr is not None:
                if not g.contains(addr):
                    raise UnresolvedPlaceholder(text, g.rows, g.cols)
                return g[addr]
        if warnings is not None:
            warnings.append(f"leaf {skel!r} is not a cell address; kept as a literal")
    return skel


def synthesize_sre(g: Grid, h: NormalizedHeaders, schema: HierarchySchema, gateway: Gateway, *, feedback: str = "") -> Tree:
    """Skeleton with A1 leaves, resolved against the grid."""
    prompt = _construction_prompt(coordinate_view(g), h, schema) + "\n\n" + prompts.load("sre")
    reply = gateway.ask(Phase.CONSTRUCTION, _with_feedback(prompt, feedback), purpose="construct-sre")
    warnings: list[str] = []
    tree = resolve_placeholders(_require_tree(parse_tree_text(reply)), g, warnings=warnings)
    for w in warnings[:20]:
        log.warning(w)
    return tree


def synthesize_pss(g: Grid, h: NormalizedHeaders, schema: HierarchySchema, gateway: Gateway, *, feedback: str = "") -> dict:
    """The model writes a construction script that the engine runs over the grid."""
    preview = coordinate_view(g, max_rows=SCRIPT_PREVIEW_ROWS)
    prompt = _construction_prompt(preview, h, schema) + "\n\n" + prompts.render(
        "pss", ROWS=g.rows, COLS=g.cols, LAST_COL=column_letters(g.cols - 1)
    )
    reply = gateway.ask(Phase.CONSTRUCTION, _with_feedback(prompt, feedback), purpose="construct-pss")
    result = run_script(parse_script(reply), g, h.headers)
    for w in result.warnings[:20]:
        log.warning(w)
    return _require_tree(result.tree)


SYNTHESIZERS = {
    SynthesisMode.DSP: synthesize_dsp,
    SynthesisMode.SRE: synthesize_sre,
    SynthesisMode.PSS: synthesize_pss,
}


def synthesize(mode: SynthesisMode, g: Grid, h: NormalizedHeaders, schema: HierarchySchema, gateway: Gateway, *, feedback: str = "") -> Tree:
    return SYNTHESIZERS[mode](g, h, schema, gateway, feedback=feedback)


def supplement(
    tree: dict,
    unmapped: Sequence[CellAddress],
    g: Grid,
    h: NormalizedHeaders,
    mode: SynthesisMode,
    gateway: Gateway,
    *,
    feedback: str = "",
) -> dict:
    """Add missing cells while leaving every existing path untouched.

    Only the header rows and the rows holding missing cells are sent. In
    placeholder and script modes the model may answer with A1 addresses.
    """
    cells = list(unmapped)[:SUPPLEMENT_MAX_CELLS]
    rows = sorted(set(range(h.header_rows)) | {a.row for a in cells})
    missing = "\n".join(f"{a.to_a1()}: {g[a]}" for a in cells)
    prompt = prompts.render(
        "supplement",
        TREE=dumps_tree(tree),
        MISSING_CELLS=missing,
        TABLE_AS_JSON_STRING=iter_rows_json([g.to_rows()[r] for r in rows]),
    )
    reply = gateway.ask(Phase.CONSTRUCTION, _with_feedback(prompt, feedback), purpose="supplement")
    extra = parse_tree_text(reply)
    if mode is not SynthesisMode.DSP:
        extra = resolve_placeholders(extra, g)
    merged = deep_merge(tree, extra)
    lost = [e.path for e in iter_leaves(tree) if not resolves(merged, e.path)]
    if lost:
        raise MalformedTree(f"supplement dropped {len(lost)} existing paths, e.g. {list(lost[0])!r}")
    return merged
