"""Evaluator-guided reconstruction loop."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator

from ..errors import MalformedResponse, ReconstructionFailed, SchemaInvalid, SynthesisError, BudgetExhausted
from ..evaluator import CorrectionAction, QualityReport, RefinementConfig, evaluate
from ..gateway import Gateway
from ..modes import BudgetConfig, SynthesisMode, effective_budget, select_mode, with_reserve
from ..table import DEFAULT_COUNTER, Grid, TableStats, TokenCounter, compute_stats
from ..tree import Tree, render_path
from .headers import NormalizedHeaders, clean_headers, header_depth, normalize_headers, stacked_headers
from .hierarchy import HierarchySchema, default_schema, identify_hierarchy
from .synthesis import supplement, synthesize

log = logging.getLogger(__name__)

Scorer = Callable[[Tree, Grid, RefinementConfig], QualityReport]
MAX_FEEDBACK_PATHS = 20


@dataclass
class ReconstructionAttempt:
    tree: Tree
    report: QualityReport
    mode: SynthesisMode
    attempt_index: int
    step: str = "synthesize"


@dataclass
class ReconstructionResult:
    tree: Tree
    report: QualityReport
    mode: SynthesisMode
    attempts: list[ReconstructionAttempt]
    headers: NormalizedHeaders
    schema: HierarchySchema
    stats: TableStats
    t_tree: float = 0.0
    failures: list[str] = field(default_factory=list)
    chosen: int = 0

    def __iter__(self) -> Iterator:
        yield self.tree
        yield self.report

    def cache_header(self, table_id: str = "") -> dict:
        return {
            "table_id": table_id,
            "mode": self.mode.value,
            "attempts": len(self.attempts) + len(self.failures),
            "chosen_attempt": self.chosen,
            "scores": [[a.report.coverage, a.report.integrity] for a in self.attempts],
            "coverage": self.report.coverage,
            "integrity": self.report.integrity,
            "action": self.report.action.value,
            "t_tree": self.t_tree,
        }


def _default_scorer(t: Tree, g: Grid, cfg: RefinementConfig) -> QualityReport:
    return evaluate(t, g, cfg)


def _broken_feedback(report: QualityReport) -> str:
    lines = [
        f"Structural integrity is {report.integrity:.3f}. These paths do not line up with the table rows and columns:",
    ]
    for path, label in report.broken_paths[:MAX_FEEDBACK_PATHS]:
        lines.append(f"- {render_path(path)} (misplaced label {label!r})")
    return "\n".join(lines)


def pick_best(attempts: list[ReconstructionAttempt]) -> ReconstructionAttempt:
    """Highest average of the two metrics; the earliest attempt wins ties."""
    best = attempts[0]
    for a in attempts[1:]:
        if a.report.average > best.report.average:
            best = a
    return best


def _headers(g: Grid, gateway: Gateway) -> NormalizedHeaders:
    try:
        return normalize_headers(g, gateway)
    except MalformedResponse as exc:
        log.warning("header normalization failed, stacking header rows instead: %s", exc)
        depth = header_depth(g)
        headers, warnings = clean_headers(stacked_headers(g, depth), g.cols)
        return NormalizedHeaders(headers, depth, tuple(warnings))


def _schema(g: Grid, h: NormalizedHeaders, gateway: Gateway, feedback: str = "", fallback: HierarchySchema | None = None) -> HierarchySchema:
    try:
        return identify_hierarchy(g, h, gateway, feedback=feedback)
    except SchemaInvalid as exc:
        log.warning("hierarchy identification failed, keeping a fallback schema: %s", exc)
        return fallback or default_schema(h)


def choose_mode(g: Grid, budget: BudgetConfig, counter: TokenCounter = DEFAULT_COUNTER) -> tuple[SynthesisMode, TableStats]:
    stats = compute_stats(g, counter, budget.gamma)
    cfg = budget if budget.e_reserve else with_reserve(stats, budget)
    try:
        b = effective_budget(cfg)
    except BudgetExhausted as exc:
        log.warning("%s; treating the budget as zero", exc)
        b = 0.0
    return select_mode(stats, b, cfg), stats


def reconstruct(
    g: Grid,
    cfg: RefinementConfig | None = None,
    budget: BudgetConfig | None = None,
    gateway: Gateway | None = None,
    *,
    scorer: Scorer | None = None,
    counter: TokenCounter = DEFAULT_COUNTER,
    clock: Callable[[], float] = time.perf_counter,
    mode: SynthesisMode | None = None,
) -> ReconstructionResult:
    """Build a semantic tree, evaluating and correcting up to ``max_attempts`` times.

    A structural deficiency re-runs hierarchy identification with the broken
    paths as feedback and synthesizes again; a coverage deficiency keeps the
    tree and asks for the missing cells. When no attempt passes, the one
    with the best metric average is returned.
    """
    if gateway is None:
        raise ValueError("a gateway is required")
    cfg = cfg or RefinementConfig()
    budget = budget or BudgetConfig()
    scorer = scorer or _default_scorer
    start = clock()

    headers = _headers(g, gateway)
    schema = _schema(g, headers, gateway)
    chosen_mode, stats = choose_mode(g, budget, counter)
    mode = mode or chosen_mode

    attempts: list[ReconstructionAttempt] = []
    failures: list[str] = []
    action: CorrectionAction | None = None
    last: ReconstructionAttempt | None = None
    error_feedback = ""
    for i in range(cfg.max_attempts):
        step = "synthesize"
        try:
            if action is CorrectionAction.SUPPLEMENT_COVERAGE and last is not None:
                step = "supplement"
                tree = supplement(last.tree, last.report.unmapped_cells, g, headers, mode, gateway, feedback=error_feedback)
            else:
                if action is CorrectionAction.REBUILD_HIERARCHY and last is not None:
                    step = "rebuild"
                    schema = _schema(g, headers, gateway, _broken_feedback(last.report), fallback=schema)
                    action = None
                tree = synthesize(mode, g, headers, schema, gateway, feedback=error_feedback)
        except SynthesisError as exc:
            failures.append(f"attempt {i + 1} ({step}): {exc}")
            log.warning("reconstruction attempt %d failed: %s", i + 1, exc)
            error_feedback = f"The previous output could not be used: {exc}"
            continue
        error_feedback = ""
        report = scorer(tree, g, cfg)
        last = ReconstructionAttempt(tree, report, mode, i, step)
        attempts.append(last)
        if report.action is CorrectionAction.ACCEPT:
            break
        action = report.action

    if not attempts:
        raise ReconstructionFailed("; ".join(failures) or "no attempts were made")
    best = pick_best(attempts)
    return ReconstructionResult(
        tree=best.tree,
        report=best.report,
        mode=mode,
        attempts=attempts,
        headers=headers,
        schema=schema,
        stats=stats,
        t_tree=clock() - start,
        failures=failures,
        chosen=best.attempt_index,
    )
