from __future__ import annotations

import random
import time

import pytest
from hypothesis import given, strategies as st

from fixtures import EXPENSE_EMPTY, STD_ERROR_MEAN, STD_ERROR_SUM, expense_tree, overhead_tree, std_error_tree
from reference_eval import RefError, random_program, random_tree, ref_eval, render
from treeqa.errors import LimitExceeded, ParseError, PathError, ProgramTypeError, QueryError
from treeqa.gateway import Gateway, HashingEmbedder, Phase, ScriptedChat
from treeqa.symbolic import (
    SandboxLimits,
    execute,
    format_answer,
    is_failure,
    parse_program,
    symbolic_answer,
    unparse,
)

KEYS_PROG = 'len(keys(get(["Manufacturing Overhead Budget", "Fixed Expenses", "Quarter 1"])))'
EMPTY_PROG = 'count_where(get(["Expenses"]), "Summary", is_empty)'
MEAN_PROG = 'mean(filter_nonnull(values(get(["Std Error"]))))'


def gw(*responses):
    entries = [{"match": {"phase": "symbolic"}, "response": r} for r in responses]
    return Gateway(ScriptedChat(entries), HashingEmbedder())


# -- case answers ---------------------------------------------------------------


def test_key_enumeration():
    assert execute(KEYS_PROG, overhead_tree()).value == 9


def test_empty_field_count():
    assert execute(EMPTY_PROG, expense_tree()).value == EXPENSE_EMPTY == 26


def test_mean_over_non_null():
    t = std_error_tree()
    assert execute('len(values(get(["Std Error"])))', t).value == 18
    assert execute('count(values(get(["Std Error"])))', t).value == 14
    assert execute('sum(values(get(["Std Error"])))', t).value == pytest.approx(STD_ERROR_SUM, abs=1e-9)
    assert execute(MEAN_PROG, t).value == pytest.approx(3685.4505, abs=1e-3)
    assert STD_ERROR_MEAN == pytest.approx(STD_ERROR_SUM / 14, abs=1e-9)
    assert format_answer(execute(MEAN_PROG, t).value) == "3685.4505"


# -- parsing ------------------------------------------------------------------


@pytest.mark.parametrize("src", [KEYS_PROG, EMPTY_PROG, MEAN_PROG, 'count_where(values(get("a")), gt(2.5))', "argmax(get([\"a\"]))"])
def test_unparse_round_trip(src):
    prog = parse_program(src)
    assert parse_program(unparse(prog.root)).root == prog.root


def test_fences_and_assignment_stripped():
    prog = parse_program("```python\nanswer = len(get(['x']))\n```")
    assert unparse(prog.root) == 'len(get(["x"]))'


@pytest.mark.parametrize(
    "src, fragment",
    [
        ("", "empty program"),
        ("open('x')", "unknown primitive 'open'"),
        ("len(get(['a']), 2)", "takes 1"),
        ("count_where(get(['a']), 3)", "predicate"),
        ("len(get(['a'])", "expected ')'"),
        ("gt", "needs an argument"),
        ("len(get(['a'])) extra", "after the expression"),
        ("__import__", "unknown primitive"),
    ],
)
def test_parse_errors(src, fragment):
    with pytest.raises(ParseError, match=fragment.replace("(", r"\(").replace(")", r"\)")):
        parse_program(src)


# -- interpreter errors and limits ----------------------------------------------


def test_path_error_reports_prefix():
    with pytest.raises(PathError) as info:
        execute('get(["Manufacturing Overhead Budget", "Nope"])', overhead_tree())
    assert info.value.prefix == ("Manufacturing Overhead Budget",)


def test_type_errors():
    with pytest.raises(ProgramTypeError):
        execute('keys(get(["a"]))', {"a": "1"})
    with pytest.raises(ProgramTypeError):
        execute('len(get(["a"]))', {"a": None})


def test_step_limit():
    t = {"r": {str(i): i for i in range(500)}}
    with pytest.raises(LimitExceeded):
        execute('sum(values(get(["r"])))', t, SandboxLimits(max_steps=100))
    assert execute('sum(values(get(["r"])))', t).value == sum(range(500))


def test_result_size_limit():
    t = {"r": {str(i): i for i in range(50)}}
    with pytest.raises(LimitExceeded):
        execute('keys(get(["r"]))', t, SandboxLimits(max_result_size=10))


def test_timeout_uses_injected_clock():
    ticks = iter(range(0, 10**6, 10))
    with pytest.raises(LimitExceeded, match="time limit"):
        execute('sum(values(get(["r"])))', {"r": {"a": 1, "b": 2}}, SandboxLimits(timeout=5), clock=lambda: next(ticks))


def test_aggregate_edge_semantics():
    t = {"r": {"a": None, "b": "text", "c": {"nested": 1}}}
    assert execute('sum(get(["r"]))', t).value == 0
    assert execute('mean(get(["r"]))', t).value is None
    assert execute('argmax(get(["r"]))', t).value is None
    assert execute('count_where(get(["r"]), is_empty)', t).value == 1
    assert execute('count_where(get(["r"]), equals("TEXT"))', t).value == 1


@given(st.dictionaries(st.text("abc", min_size=1, max_size=3), st.integers(-50, 50), min_size=1, max_size=8))
def test_aggregates_match_python(d):
    t = {"r": d}
    vals = list(d.values())
    assert execute('sum(get(["r"]))', t).value == sum(vals)
    assert execute('max(get(["r"]))', t).value == max(vals)
    assert execute('argmin(get(["r"]))', t).value == min(d, key=lambda k: (d[k], list(d).index(k)))


def test_random_programs_match_reference():
    rng = random.Random(20240611)
    start = time.perf_counter()
    mismatches = []
    for i in range(1000):
        tree = random_tree(rng)
        prog = random_program(rng, tree)
        src = render(prog)
        try:
            expected = ("ok", ref_eval(prog, tree))
        except RefError as exc:
            expected = ("err", exc.kind)
        try:
            actual = ("ok", execute(src, tree).value)
        except PathError:
            actual = ("err", "path")
        except ProgramTypeError:
            actual = ("err", "type")
        if expected[0] == actual[0] == "ok" and isinstance(expected[1], float):
            same = actual[1] == pytest.approx(expected[1], rel=1e-12, abs=1e-12)
        else:
            same = expected == actual
        if not same:
            mismatches.append((src, tree, expected, actual))
    assert mismatches == []
    assert time.perf_counter() - start < 10


# -- reasoning loop -------------------------------------------------------------


def test_symbolic_answer_first_try():
    g = gw(KEYS_PROG)
    out = symbolic_answer(overhead_tree(), "How many fixed expense items?", g)
    assert out.answer == "9" and out.corrections == 0
    req = g.requests()[0]
    assert req.phase is Phase.SYMBOLIC and req.temperature == 0.3 and req.purpose == "program"
    assert "16,635" not in req.user and '"Cash Output"' in req.user


def test_symbolic_self_correction():
    g = gw('get(["Manufacturing Overhead Budget", "Fixed Expense"])', "nonsense(", KEYS_PROG)
    out = symbolic_answer(overhead_tree(), "q", g, max_corrections=2)
    assert out.answer == "9" and out.corrections == 2 and len(out.errors) == 2
    fix = g.requests(purpose="program-fix")
    assert len(fix) == 2 and "deepest existing prefix" in fix[0].user


def test_symbolic_failure_after_budget():
    g = gw("bad(", "bad(", "bad(")
    out = symbolic_answer(overhead_tree(), "q", g, max_corrections=2)
    assert is_failure(out.answer) and len(g.log) == 3


def test_limit_exceeded_triggers_correction():
    t = {"r": {str(i): i for i in range(200)}}
    g = gw('sum(values(get(["r"])))', 'len(get(["r"]))')
    out = symbolic_answer(t, "q", g, SandboxLimits(max_steps=50))
    assert out.answer == "200" and "LimitExceeded" in out.errors[0]


def test_full_tree_option():
    g = gw(KEYS_PROG)
    symbolic_answer(overhead_tree(), "q", g, use_skeleton=False)
    assert "16,635" in g.requests()[0].user


def test_format_answer():
    assert format_answer(["a", 2]) == "a, 2"
    assert format_answer(None) == "None"
    assert format_answer(26) == "26"
    assert issubclass(LimitExceeded, QueryError)
