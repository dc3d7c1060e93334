"""Symbolic reasoning: skeleton prompt, program generation, execution, self-correction."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

from .. import prompts
from ..errors import QueryError
from ..gateway import Gateway, Phase
from ..numeric import format_number
from ..tree import Tree, dumps_tree, skeleton
from .interpreter import ExecutionResult, SandboxLimits, execute
from .program import parse_program

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Exemplar:
    kind: str
    question: str
    program: str


DEFAULT_EXEMPLARS: tuple[Exemplar, ...] = (
    Exemplar(
        "selection",
        "What was the Revenue of Region - North in 2020?",
        'get(["Region - North", "Revenue", "2020"])',
    ),
    Exemplar(
        "aggregation",
        "What is the average Score over all students, ignoring missing scores?",
        'mean(filter_nonnull(values(get(["Scores"]))))',
    ),
    Exemplar(
        "comparison",
        "Which product had the highest Sales?",
        'argmax(get(["Sales"]))',
    ),
)


@dataclass(frozen=True)
class SymbolicFailure:
    """Marks a symbolic answer that could not be produced."""

    reason: str

    def __str__(self) -> str:
        return f"<symbolic failure: {self.reason}>"


def is_failure(answer: object) -> bool:
    return isinstance(answer, SymbolicFailure)


@dataclass
class SymbolicOutcome:
    answer: str | SymbolicFailure
    program: str = ""
    result: ExecutionResult | None = None
    corrections: int = 0
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "answer": str(self.answer),
            "failed": is_failure(self.answer),
            "program": self.program,
            "corrections": self.corrections,
            "errors": self.errors,
            "steps": self.result.steps_used if self.result else 0,
            "trace": [list(t) for t in self.result.trace] if self.result else [],
        }


def format_answer(value: Any) -> str:
    if value is None:
        return "None"
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, (int, float)):
        return format_number(value)
    if isinstance(value, list):
        return ", ".join(format_answer(v) for v in value)
    if isinstance(value, dict):
        return json.dumps(value, ensure_ascii=False)
    return str(value)


def render_exemplars(exemplars: Sequence[Exemplar]) -> str:
    if not exemplars:
        return ""
    lines = ["[Examples]:"]
    for ex in exemplars:
        lines.append(f"Question ({ex.kind}): {ex.question}")
        lines.append(f"Expression: {ex.program}")
    return "\n".join(lines) + "\n"


def build_symbolic_prompt(skel: Tree, question: str, exemplars: Sequence[Exemplar] = DEFAULT_EXEMPLARS) -> str:
    return prompts.render(
        "symbolic",
        SKELETON=dumps_tree(skel, indent=1),
        QUESTION=question,
        EXEMPLARS=render_exemplars(exemplars),
    )


def symbolic_answer(
    t: Tree,
    question: str,
    gateway: Gateway,
    lim: SandboxLimits | None = None,
    max_corrections: int = 2,
    *,
    exemplars: Sequence[Exemplar] = DEFAULT_EXEMPLARS,
    use_skeleton: bool = True,
) -> SymbolicOutcome:
    """Generate, run and repair a program; at most ``max_corrections`` repairs.

    ``use_skeleton=False`` sends the full tree instead of the skeleton.
    """
    if max_corrections < 0:
        raise ValueError("max_corrections must be non-negative")
    base = build_symbolic_prompt(skeleton(t) if use_skeleton else t, question, exemplars)
    user = base
    errors: list[str] = []
    program = ""
    for attempt in range(max_corrections + 1):
        reply = gateway.ask(Phase.SYMBOLIC, user, purpose="program" if attempt == 0 else "program-fix")
        program = reply.strip()
        try:
            result = execute(parse_program(reply), t, lim)
        except QueryError as exc:
            errors.append(f"{type(exc).__name__}: {exc}")
            log.info("symbolic attempt %d failed: %s", attempt + 1, exc)
            user = base + "\n\n" + prompts.render("symbolic_fix", PROGRAM=program, ERROR=errors[-1])
            continue
        return SymbolicOutcome(format_answer(result.value), program, result, attempt, errors)
    return SymbolicOutcome(SymbolicFailure(errors[-1] if errors else "no program"), program, None, max_corrections, errors)
