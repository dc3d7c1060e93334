"""Dataset loading, the tree cache and the benchmark runner."""

from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .construction.refine import reconstruct
from .evaluator import RefinementConfig
from .gateway import Gateway, Phase
from .modes import BudgetConfig
from .navigation import TraversalConfig, answer_textual
from .selection import CandidatePair, Judge, amortized_time, offline_judge, select_answer
from .symbolic.interpreter import SandboxLimits
from .symbolic.reasoner import is_failure, symbolic_answer
from .table import Grid, parse_grid
from .tree import CacheDocument, Tree, dumps_tree, read_cache, serialize_cache

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetRecord:
    table_id: str
    table: tuple[tuple[str, ...], ...]
    question: str
    answer: str

    @property
    def grid(self) -> Grid:
        return parse_grid(self.table)


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    """JSON lines of ``{table_id, table, question, answer}``; blank lines are skipped."""
    records = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            table = parse_grid(row["table"])
            records.append(DatasetRecord(str(row["table_id"]), table.cells, str(row["question"]), str(row["answer"])))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}:{n}: bad dataset record: {exc}") from exc
    return records


def group_by_table(records: Iterable[DatasetRecord]) -> dict[str, list[DatasetRecord]]:
    groups: dict[str, list[DatasetRecord]] = {}
    for r in records:
        groups.setdefault(r.table_id, []).append(r)
        if r.table != groups[r.table_id][0].table:
            log.warning("table %r appears with different contents; using the first", r.table_id)
    return groups


def cache_path(cache_dir: str | Path, table_id: str) -> Path:
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", table_id)[:80]
    digest = hashlib.sha1(table_id.encode("utf-8")).hexdigest()[:8]
    return Path(cache_dir) / f"{safe}-{digest}.json"


@dataclass(frozen=True)
class BenchConfig:
    refinement: RefinementConfig = field(default_factory=RefinementConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    traversal: TraversalConfig = field(default_factory=TraversalConfig)
    sandbox: SandboxLimits = field(default_factory=SandboxLimits)
    max_corrections: int = 2


def build_tree_cached(
    table_id: str,
    grid: Grid,
    gateway: Gateway,
    cfg: BenchConfig,
    cache_dir: str | Path | None,
    clock: Callable[[], float],
) -> CacheDocument:
    path = cache_path(cache_dir, table_id) if cache_dir is not None else None
    if path is not None and path.exists():
        return read_cache(path.read_bytes())
    result = reconstruct(grid, cfg.refinement, cfg.budget, gateway, clock=clock)
    header = result.cache_header(table_id)
    header["report"] = result.report.to_dict()
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(serialize_cache(result.tree, header))
    return CacheDocument(result.tree, header)


def answer_question(tree: Tree, question: str, gateway: Gateway, cfg: BenchConfig) -> dict:
    """Both reasoning modes followed by adaptive selection."""
    textual = answer_textual(tree, question, gateway, cfg.traversal)
    symbolic = symbolic_answer(tree, question, gateway, cfg.sandbox, cfg.max_corrections)
    pair = CandidatePair(textual.answer, symbolic.answer)
    chosen = select_answer(dumps_tree(tree), question, pair, gateway)
    return {
        "textual": textual,
        "symbolic": symbolic,
        "pair": pair,
        "selection": chosen,
    }


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def _seconds(x: float) -> float:
    """Round timings to nanoseconds so clock offsets cannot leak float noise into reports."""
    return round(x, 9)


def run_bench(
    records: list[DatasetRecord],
    gateway: Gateway,
    cfg: BenchConfig | None = None,
    *,
    cache_dir: str | Path | None = None,
    judge: Judge = offline_judge,
    clock: Callable[[], float] = time.perf_counter,
) -> dict:
    """Run every question; the report is plain JSON-compatible data."""
    cfg = cfg or BenchConfig()
    questions, tables = [], []
    for table_id, group in group_by_table(records).items():
        doc = build_tree_cached(table_id, group[0].grid, gateway, cfg, cache_dir, clock)
        tree = doc.tree
        t_qa = []
        for rec in group:
            start = clock()
            out = answer_question(tree, rec.question, gateway, cfg)
            elapsed = _seconds(clock() - start)
            t_qa.append(elapsed)
            pair, sel = out["pair"], out["selection"]
            textual_ok = judge(rec.question, rec.answer, str(pair.textual))
            symbolic_ok = not is_failure(pair.symbolic) and judge(rec.question, rec.answer, str(pair.symbolic))
            questions.append(
                {
                    "table_id": table_id,
                    "question": rec.question,
                    "gold": rec.answer,
                    "textual": str(pair.textual),
                    "symbolic": str(pair.symbolic),
                    "symbolic_failed": is_failure(pair.symbolic),
                    "final": sel.answer,
                    "mode_used": sel.source,
                    "selector_called": sel.selector_called,
                    "direction": out["textual"].direction.value,
                    "program": out["symbolic"].program,
                    "corrections": out["symbolic"].corrections,
                    "correct": judge(rec.question, rec.answer, sel.answer),
                    "textual_correct": textual_ok,
                    "symbolic_correct": symbolic_ok,
                    "oracle_correct": textual_ok or symbolic_ok,
                    "t_qa": elapsed,
                }
            )
        header = doc.header
        t_tree = _seconds(float(header.get("t_tree", 0.0)))
        mean_qa = _seconds(_mean(t_qa))
        tables.append(
            {
                "table_id": table_id,
                "mode": header.get("mode"),
                "attempts": header.get("attempts"),
                "coverage": header.get("coverage"),
                "integrity": header.get("integrity"),
                "n_questions": len(group),
                "t_tree": t_tree,
                "t_qa": mean_qa,
                "amortized_time": _seconds(amortized_time(t_tree, mean_qa, len(group))),
            }
        )
    n = len(questions)

    def rate(key: str) -> float:
        return sum(1 for q in questions if q[key]) / n if n else 0.0

    aggregate = {
        "n_questions": n,
        "n_tables": len(tables),
        "accuracy": rate("correct"),
        "oracle_accuracy": rate("oracle_correct"),
        "textual_accuracy": rate("textual_correct"),
        "symbolic_accuracy": rate("symbolic_correct"),
        "selector_calls": sum(1 for q in questions if q["selector_called"]),
        "amortized_time": _seconds(_mean([t["amortized_time"] for t in tables])),
    }
    return {"aggregate": aggregate, "tables": tables, "questions": questions}


def dumps_report(report: dict) -> str:
    return json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def audit_selector_calls(report: dict, gateway: Gateway) -> list[str]:
    """Selector calls made where none were warranted, or missing where they were."""
    problems = []
    warranted = [
        q for q in report["questions"] if not q["symbolic_failed"] and q["mode_used"] != "agree"
    ]
    for q in report["questions"]:
        if q["selector_called"] and (q["symbolic_failed"] or q["mode_used"] == "agree"):
            problems.append(f"selector called for {q['question']!r} without a conflict")
    logged = len(gateway.requests(phase=Phase.SELECTION))
    if logged != len(warranted):
        problems.append(f"{logged} selector requests logged but {len(warranted)} conflicts seen")
    return problems
