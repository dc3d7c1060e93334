"""Brute-force reference for tree-query programs.

Programs are generated here as nested tuples, rendered to source text for
the real parser, and evaluated directly by :func:`ref_eval`. Leaf values
come from a fixed pool whose numeric readings are tabulated by hand, so
nothing here goes through the package's normalizer or interpreter.
"""

from __future__ import annotations

import json
import random

# leaf value -> numeric reading (None: not a number)
LEAF_POOL: list[tuple[object, float | None]] = [
    ("1,200", 1200),
    ("(3)", -3),
    ("4.5", 4.5),
    ("7¢", 7),
    ("12%", 12),
    ("abc", None),
    ("Total", None),
    ("", None),
    ("  ", None),
    (None, None),
    (10, 10),
    ("2", 2),
    ("-0.5", -0.5),
]
NUMERIC = {json.dumps(v): n for v, n in LEAF_POOL}
LABELS = ["a", "b", "c", "Total", "x y"]

AGGREGATES = ["len", "sum", "mean", "min", "max", "count"]
PREDS = ["is_empty", "is_nonempty", "gt", "lt", "ge", "le", "equals"]


class RefError(Exception):
    def __init__(self, kind: str):
        super().__init__(kind)
        self.kind = kind  # "path" or "type"


def number_of(v: object) -> float | None:
    if isinstance(v, (dict, list)):
        return None
    return NUMERIC.get(json.dumps(v))


def empty(v: object) -> bool:
    return v is None or (isinstance(v, str) and v.strip() == "") or (isinstance(v, (dict, list)) and len(v) == 0)


# -- generation ---------------------------------------------------------------


def random_tree(rng: random.Random, depth: int = 3) -> dict:
    out = {}
    for label in rng.sample(LABELS, rng.randint(1, 4)):
        if depth > 1 and rng.random() < 0.45:
            out[label] = random_tree(rng, depth - 1)
        else:
            out[label] = rng.choice(LEAF_POOL)[0]
    return out


def node_paths(t: dict, prefix: tuple = ()) -> list[tuple]:
    out = [prefix]
    for k, v in t.items():
        if isinstance(v, dict):
            out.extend(node_paths(v, prefix + (k,)))
        else:
            out.append(prefix + (k,))
    return out


def random_pred(rng: random.Random) -> tuple:
    name = rng.choice(PREDS)
    if name in ("is_empty", "is_nonempty"):
        return ("pred", name, None)
    if name == "equals":
        return ("pred", name, rng.choice(["1,200", "abc", "Total", "2", "4.5"]))
    return ("pred", name, rng.choice([0, 2, 5, 10.5]))


def internal_paths(t: dict, prefix: tuple = ()) -> list[tuple]:
    out = [prefix]
    for k, v in t.items():
        if isinstance(v, dict):
            out.extend(internal_paths(v, prefix + (k,)))
    return out


def random_collection(rng: random.Random, t: dict, depth: int) -> tuple:
    roll = rng.random()
    if depth <= 0 or roll < 0.55:
        pick = rng.random()
        if pick < 0.06:
            return ("get", node_paths(t)[-1] + ("missing",))
        if pick < 0.2:
            return ("get", rng.choice(node_paths(t)))
        return ("get", rng.choice(internal_paths(t)))
    if roll < 0.8:
        return ("values", random_collection(rng, t, depth - 1))
    return ("filter_nonnull", random_collection(rng, t, depth - 1))


def random_program(rng: random.Random, t: dict) -> tuple:
    coll = random_collection(rng, t, 2)
    roll = rng.random()
    if roll < 0.45:
        return (rng.choice(AGGREGATES), coll)
    if roll < 0.6:
        return ("count_where", coll, random_pred(rng))
    if roll < 0.72:
        return ("count_where_field", coll, rng.choice(LABELS), random_pred(rng))
    if roll < 0.86:
        return (rng.choice(["argmax", "argmin"]), coll)
    if roll < 0.93:
        return ("keys", coll)
    return coll


# -- rendering ----------------------------------------------------------------


def render(p: tuple) -> str:
    op = p[0]
    if op == "get":
        return "get(" + json.dumps(list(p[1]), ensure_ascii=False) + ")"
    if op == "pred":
        if p[2] is None:
            return p[1]
        return f"{p[1]}({json.dumps(p[2], ensure_ascii=False)})"
    if op == "count_where":
        return f"count_where({render(p[1])}, {render(p[2])})"
    if op == "count_where_field":
        return f"count_where({render(p[1])}, {json.dumps(p[2])}, {render(p[3])})"
    return f"{op}({render(p[1])})"


# -- evaluation ---------------------------------------------------------------


def items_of(v: object) -> list:
    if isinstance(v, dict):
        return list(v.values())
    if isinstance(v, list):
        return list(v)
    raise RefError("type")


def holds(pred: tuple, v: object) -> bool:
    _, name, arg = pred
    if name == "is_empty":
        return empty(v)
    if name == "is_nonempty":
        return not empty(v)
    if isinstance(v, (dict, list)):
        return False
    if name == "equals":
        if v is None:
            return False
        a, b = number_of(v), number_of(arg)
        if a is not None and b is not None:
            return a == b
        return str(v).strip().casefold() == str(arg).strip().casefold()
    x = number_of(v)
    if x is None:
        return False
    return {"gt": x > arg, "lt": x < arg, "ge": x >= arg, "le": x <= arg}[name]


def ref_eval(p: tuple, t: dict) -> object:
    op = p[0]
    if op == "get":
        cur = t
        for label in p[1]:
            if not isinstance(cur, dict) or label not in cur:
                raise RefError("path")
            cur = cur[label]
        return cur
    if op == "count_where":
        return sum(1 for v in items_of(ref_eval(p[1], t)) if holds(p[2], v))
    if op == "count_where_field":
        kids = items_of(ref_eval(p[1], t))
        return sum(1 for v in kids if isinstance(v, dict) and holds(p[3], v.get(p[2])))
    x = ref_eval(p[1], t)
    if op == "values":
        return items_of(x)
    if op == "filter_nonnull":
        if isinstance(x, dict):
            return {k: v for k, v in x.items() if not empty(v)}
        return [v for v in items_of(x) if not empty(v)]
    if op == "keys":
        if not isinstance(x, dict):
            raise RefError("type")
        return list(x)
    if op == "len":
        if not isinstance(x, (dict, list)):
            raise RefError("type")
        return len(x)
    if op in ("argmax", "argmin"):
        if not isinstance(x, dict):
            raise RefError("type")
        best_k, best = None, None
        for k, v in x.items():
            n = number_of(v)
            if n is None:
                continue
            if best is None or (n > best if op == "argmax" else n < best):
                best_k, best = k, n
        return best_k
    nums = [n for n in (number_of(v) for v in items_of(x)) if n is not None]
    if op == "count":
        return len(nums)
    if op == "sum":
        return sum(nums)
    if not nums:
        return None
    return {"mean": lambda: sum(nums) / len(nums), "min": lambda: min(nums), "max": lambda: max(nums)}[op]()
