"""Command-line entry point: build-tree, ask, evaluate, bench."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bench import BenchConfig, dumps_report, load_dataset, run_bench
from .config import Settings, apply_overrides, build_gateway, load_settings
from .construction.refine import reconstruct
from .errors import TreeQAError
from .evaluator import CorrectionAction, evaluate
from .modes import SynthesisMode
from .navigation import NavigationDirection, answer_textual
from .selection import CandidatePair, LLMJudge, offline_judge, select_answer
from .symbolic.reasoner import symbolic_answer
from .table import load_grid
from .tree import dumps_tree, read_cache, serialize_cache

log = logging.getLogger("treeqa")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON settings file")
    p.add_argument("--transcript", help="scripted model transcript (JSON) instead of a live provider")
    _overrides(p)


def _overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a setting, e.g. budget.alpha=0.5 or refinement.max_attempts=2",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treeqa", description="Question answering over complex tables via semantic trees.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-tree", help="reconstruct a table into a cached semantic tree")
    b.add_argument("--input", required=True, help="table as .json (array of arrays) or .csv")
    b.add_argument("--out", required=True, help="cache file to write")
    b.add_argument("--table-id", default="", help="identifier stored in the cache header")
    b.add_argument("--synthesis", choices=[m.value for m in SynthesisMode], help="force a synthesis mode")
    _common(b)

    a = sub.add_parser("ask", help="answer a question over a cached tree")
    a.add_argument("--tree", required=True, help="cache file from build-tree")
    a.add_argument("--question", required=True)
    a.add_argument("--mode", choices=["textual", "symbolic", "adaptive"], default="adaptive")
    a.add_argument("--force-direction", choices=["r2l", "l2r"], help="skip direction classification")
    a.add_argument("--no-embeddings", action="store_true", help="rank paths in tree order instead of by similarity")
    a.add_argument("--program-out", help="write the final symbolic program to this file")
    _common(a)

    e = sub.add_parser("evaluate", help="score a cached tree against its table (exit 0 iff accepted)")
    e.add_argument("--tree", required=True)
    e.add_argument("--table", required=True)
    e.add_argument("--config", help="JSON settings file")
    _overrides(e)

    r = sub.add_parser("bench", help="run a JSON-lines dataset end to end")
    r.add_argument("--dataset", required=True)
    r.add_argument("--cache-dir", required=True)
    r.add_argument("--report", required=True)
    r.add_argument("--judge", choices=["offline", "llm"], default="offline")
    _common(r)
    return parser


def _emit(data: dict) -> None:
    sys.stdout.write(json.dumps(data, ensure_ascii=False, indent=2) + "\n")


def cmd_build_tree(args: argparse.Namespace, settings: Settings) -> int:
    gateway, clock = build_gateway(settings, args.transcript)
    grid = load_grid(args.input)
    kwargs = {"clock": clock} if clock is not None else {}
    mode = SynthesisMode(args.synthesis) if args.synthesis else None
    result = reconstruct(grid, settings.refinement, settings.budget, gateway, mode=mode, **kwargs)
    header = result.cache_header(args.table_id or Path(args.input).stem)
    header["report"] = result.report.to_dict()
    Path(args.out).write_bytes(serialize_cache(result.tree, header))
    _emit({"mode": result.mode.value, "attempts": header["attempts"], "report": header["report"]})
    return 0


def cmd_ask(args: argparse.Namespace, settings: Settings) -> int:
    gateway, _ = build_gateway(settings, args.transcript)
    tree = read_cache(Path(args.tree).read_bytes()).tree
    traversal = settings.traversal
    if args.no_embeddings:
        traversal = replace(traversal, use_embeddings=False)
    out: dict = {"mode": args.mode}
    textual = symbolic = None
    if args.mode in ("textual", "adaptive"):
        force = NavigationDirection.parse(args.force_direction) if args.force_direction else None
        textual = answer_textual(tree, args.question, gateway, traversal, force_direction=force)
        out["textual"] = textual.to_dict()
    if args.mode in ("symbolic", "adaptive"):
        symbolic = symbolic_answer(tree, args.question, gateway, settings.sandbox, settings.max_corrections)
        out["symbolic"] = symbolic.to_dict()
        if args.program_out:
            Path(args.program_out).write_text(symbolic.program + "\n", encoding="utf-8")
    if args.mode == "adaptive":
        sel = select_answer(dumps_tree(tree), args.question, CandidatePair(textual.answer, symbolic.answer), gateway)
        out["answer"], out["source"] = sel.answer, sel.source
    else:
        out["answer"] = textual.answer if textual else str(symbolic.answer)
    _emit(out)
    return 0


def cmd_evaluate(args: argparse.Namespace, settings: Settings) -> int:
    tree = read_cache(Path(args.tree).read_bytes()).tree
    report = evaluate(tree, load_grid(args.table), settings.refinement)
    _emit(report.to_dict())
    return 0 if report.action is CorrectionAction.ACCEPT else 1


def cmd_bench(args: argparse.Namespace, settings: Settings) -> int:
    gateway, clock = build_gateway(settings, args.transcript)
    cfg = BenchConfig(settings.refinement, settings.budget, settings.traversal, settings.sandbox, settings.max_corrections)
    judge = LLMJudge(gateway) if args.judge == "llm" else offline_judge
    kwargs = {"clock": clock} if clock is not None else {}
    report = run_bench(load_dataset(args.dataset), gateway, cfg, cache_dir=args.cache_dir, judge=judge, **kwargs)
    Path(args.report).write_text(dumps_report(report), encoding="utf-8")
    _emit(report["aggregate"])
    return 0


COMMANDS = {"build-tree": cmd_build_tree, "ask": cmd_ask, "evaluate": cmd_evaluate, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = apply_overrides(load_settings(args.config), args.overrides)
        return COMMANDS[args.command](args, settings)
    except (TreeQAError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
