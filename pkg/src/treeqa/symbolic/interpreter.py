"""Sandboxed evaluation of tree-query programs.

Semantics:

* collections are maps (their child values, in order) and lists;
* numeric primitives read every scalar element through the numeric
  normalizer and skip whatever does not parse (nulls, text, nested maps);
  ``sum`` of nothing is 0, ``mean``/``min``/``max`` of nothing are null;
* ``count_where(x, "field", p)`` tests ``p`` on each child map's ``field``
  (a missing field reads as null) and ignores children that are not maps;
* ``is_empty`` holds for null, blank text and empty collections.

Every evaluated node and every element an aggregate touches costs one step.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from ..errors import LimitExceeded, PathError, ProgramTypeError
from ..numeric import NumericNormalizer, normalize_number
from ..tree import Tree
from .program import Apply, Get, ListLit, Lit, Node, Pred, TreeProgram, parse_program, unparse

MAX_TRACE = 200


@dataclass(frozen=True)
class SandboxLimits:
    max_steps: int = 100_000
    max_result_size: int = 10_000
    timeout: float = 5.0

    def __post_init__(self) -> None:
        if self.max_steps <= 0 or self.max_result_size <= 0 or self.timeout <= 0:
            raise ValueError("sandbox limits must be positive")


@dataclass
class ExecutionResult:
    value: Any
    steps_used: int
    trace: list[tuple[str, str]] = field(default_factory=list)


def kind_of(value: Any) -> str:
    if isinstance(value, dict):
        return "map"
    if isinstance(value, list):
        return "list"
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, Pred):
        return "predicate"
    return "text"


def is_empty_value(value: Any) -> bool:
    if value is None:
        return True
    if isinstance(value, str):
        return not value.strip()
    if isinstance(value, (dict, list)):
        return not value
    return False


def _summary(value: Any) -> str:
    text = json.dumps(value, ensure_ascii=False, default=str)
    return text if len(text) <= 120 else text[:117] + "..."


class _Machine:
    def __init__(self, tree: Tree, lim: SandboxLimits, normalizer: NumericNormalizer, clock: Callable[[], float]):
        self.tree = tree
        self.lim = lim
        self.num = normalizer
        self.clock = clock
        self.deadline = clock() + lim.timeout
        self.steps = 0
        self.trace: list[tuple[str, str]] = []

    def tick(self, n: int = 1) -> None:
        self.steps += n
        if self.steps > self.lim.max_steps:
            raise LimitExceeded(f"program exceeded {self.lim.max_steps} steps")
        if self.clock() > self.deadline:
            raise LimitExceeded(f"program exceeded the {self.lim.timeout:g}s time limit")

    def size_check(self, value: Any) -> Any:
        if isinstance(value, (list, dict)) and len(value) > self.lim.max_result_size:
            raise LimitExceeded(f"intermediate result of {len(value)} items exceeds {self.lim.max_result_size}")
        return value

    def eval(self, node: Node) -> Any:
        self.tick()
        value = self.size_check(self._eval(node))
        if len(self.trace) < MAX_TRACE and not isinstance(node, (Lit, Pred)):
            self.trace.append((unparse(node), _summary(value)))
        return value

    def _eval(self, node: Node) -> Any:
        if isinstance(node, Lit):
            return node.value
        if isinstance(node, ListLit):
            return [self.eval(x) for x in node.items]
        if isinstance(node, Get):
            return self.get(node.path)
        if isinstance(node, Pred):
            return node
        return self.apply(node)

    def get(self, path: tuple[str, ...]) -> Any:
        cur = self.tree
        for i, label in enumerate(path):
            self.tick()
            if not isinstance(cur, dict) or label not in cur:
                raise PathError(path, path[:i])
            cur = cur[label]
        return cur

    def elements(self, fn: str, value: Any) -> list:
        if isinstance(value, dict):
            items = list(value.values())
        elif isinstance(value, list):
            items = value
        else:
            raise ProgramTypeError(fn, kind_of(value))
        self.tick(len(items))
        return items

    def numbers(self, fn: str, value: Any) -> list:
        out = []
        for item in self.elements(fn, value):
            if isinstance(item, (dict, list)):
                continue
            n = self.num(item)
            if n is not None:
                out.append(n)
        return out

    def check_pred(self, pred: Pred, value: Any) -> bool:
        if pred.name == "is_empty":
            return is_empty_value(value)
        if pred.name == "is_nonempty":
            return not is_empty_value(value)
        if isinstance(value, (dict, list)):
            return False
        if pred.name == "equals":
            if value is None or pred.arg is None:
                return value is None and pred.arg is None
            a, b = self.num(value), self.num(pred.arg)
            if a is not None and b is not None:
                return a == b
            return str(value).strip().casefold() == str(pred.arg).strip().casefold()
        x = self.num(value)
        if x is None:
            return False
        return {"gt": x > pred.arg, "lt": x < pred.arg, "ge": x >= pred.arg, "le": x <= pred.arg}[pred.name]

    def apply(self, node: Apply) -> Any:
        fn = node.fn
        if fn == "count_where":
            pred = node.args[-1]
            target = self.eval(node.args[0])
            items = self.elements(fn, target)
            if len(node.args) == 3:
                name = node.args[1].value
                return sum(1 for item in items if isinstance(item, dict) and self.check_pred(pred, item.get(name)))
            return sum(1 for item in items if self.check_pred(pred, item))

        args = [self.eval(a) for a in node.args]
        for a in args:
            if isinstance(a, Pred):
                raise ProgramTypeError(fn, "predicate")
        x = args[0]
        if fn == "keys":
            if not isinstance(x, dict):
                raise ProgramTypeError(fn, kind_of(x))
            self.tick(len(x))
            return list(x)
        if fn == "values":
            return list(self.elements(fn, x))
        if fn == "len":
            if not isinstance(x, (dict, list)):
                raise ProgramTypeError(fn, kind_of(x))
            return len(x)
        if fn == "filter_nonnull":
            if isinstance(x, dict):
                self.tick(len(x))
                return {k: v for k, v in x.items() if not is_empty_value(v)}
            return [v for v in self.elements(fn, x) if not is_empty_value(v)]
        if fn in ("argmax", "argmin"):
            if not isinstance(x, dict):
                raise ProgramTypeError(fn, kind_of(x))
            self.tick(len(x))
            best_label, best = None, None
            for label, child in x.items():
                n = None if isinstance(child, (dict, list)) else self.num(child)
                if n is None:
                    continue
                if best is None or (n > best if fn == "argmax" else n < best):
                    best_label, best = label, n
            return best_label
        nums = self.numbers(fn, x)
        if fn == "count":
            return len(nums)
        if fn == "sum":
            return sum(nums)
        if not nums:
            return None
        if fn == "mean":
            return sum(nums) / len(nums)
        if fn == "min":
            return min(nums)
        if fn == "max":
            return max(nums)
        raise ProgramTypeError(fn, "unknown primitive")  # unreachable for parsed programs


def execute(
    prog: TreeProgram | str,
    t: Tree,
    lim: SandboxLimits | None = None,
    *,
    normalizer: NumericNormalizer = normalize_number,
    clock: Callable[[], float] = time.monotonic,
) -> ExecutionResult:
    """Evaluate ``prog`` over ``t``; raises a :class:`QueryError` subclass on failure."""
    if isinstance(prog, str):
        prog = parse_program(prog)
    machine = _Machine(t, lim or SandboxLimits(), normalizer, clock)
    value = machine.eval(prog.root)
    if isinstance(value, Pred):
        raise ProgramTypeError("program", "predicate")
    return ExecutionResult(value, machine.steps, machine.trace)
