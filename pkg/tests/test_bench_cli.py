from __future__ import annotations

import json

import pytest

from bench_suite import N_TABLES, expected_selector_calls, write_suite
from fixtures import FIN_HEADERS, FIN_HEADER_ROWS, FIN_ROWS, baseline_tree, reference_tree
from treeqa import cli
from treeqa.bench import audit_selector_calls, cache_path, dumps_report, load_dataset, run_bench
from treeqa.config import Settings, apply_overrides, build_gateway, load_settings, settings_from_dict
from treeqa.gateway import Phase
from treeqa.tree import read_cache, serialize_cache


def run_suite(tmp_path, cache_name="cache"):
    data, script = write_suite(tmp_path / "suite")
    gateway, clock = build_gateway(Settings(), script)
    report = run_bench(load_dataset(data), gateway, cache_dir=tmp_path / cache_name, clock=clock)
    return report, gateway


def test_bench_report_shape(tmp_path):
    report, gateway = run_suite(tmp_path)
    agg = report["aggregate"]
    assert agg["n_tables"] == N_TABLES and agg["n_questions"] == 3 * N_TABLES
    assert agg["selector_calls"] == expected_selector_calls()
    assert agg["accuracy"] == 1.0 and agg["oracle_accuracy"] >= agg["textual_accuracy"]
    assert audit_selector_calls(report, gateway) == []
    assert gateway.chat.unused() == []
    for t in report["tables"]:
        assert t["amortized_time"] == pytest.approx(t["t_tree"] / t["n_questions"] + t["t_qa"], abs=1e-6)


def test_cache_reuse_makes_no_construction_calls(tmp_path):
    first, _ = run_suite(tmp_path)
    data, script = tmp_path / "suite" / "suite.jsonl", tmp_path / "suite" / "transcript.json"
    gateway, clock = build_gateway(Settings(), script)
    second = run_bench(load_dataset(data), gateway, cache_dir=tmp_path / "cache", clock=clock)
    assert gateway.requests(phase=Phase.CONSTRUCTION) == []
    assert dumps_report(first) == dumps_report(second)


def test_cache_names_are_safe(tmp_path):
    p = cache_path(tmp_path, "a/b c")
    assert p.parent == tmp_path and "/" not in p.name[: -len(".json")]
    assert cache_path(tmp_path, "a/b") != cache_path(tmp_path, "a_b")


def test_dataset_errors(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"table_id": "x"}\n', encoding="utf-8")
    with pytest.raises(ValueError, match="bad.jsonl:1"):
        load_dataset(bad)


# -- configuration ------------------------------------------------------------


def test_settings(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"budget": {"alpha": 0.5}, "traversal": {"k2": 3}, "temperatures": {"navigation": 0.1}}), encoding="utf-8")
    s = load_settings(p)
    assert s.budget.alpha == 0.5 and s.traversal.k2 == 3 and s.temperatures == {"navigation": 0.1}
    with pytest.raises(ValueError):
        settings_from_dict({"budget": {"nope": 1}})
    with pytest.raises(ValueError):
        settings_from_dict({"extra": 1})


def test_overrides():
    s = apply_overrides(Settings(), ["refinement.max_attempts=2", "traversal.use_embeddings=false", "max_corrections=1"])
    assert s.refinement.max_attempts == 2 and s.traversal.use_embeddings is False and s.max_corrections == 1
    assert s.budget == Settings().budget
    with pytest.raises(ValueError):
        apply_overrides(Settings(), ["budget.alpha"])
    with pytest.raises(ValueError):
        apply_overrides(Settings(), ["bogus.key=1"])


# -- command line ---------------------------------------------------------------


def fin_transcript(tmp_path):
    schema = {"table_type": "complex", "analysis_reason": "", "hierarchy_keys": ["Category"], "value_leaves": FIN_HEADERS[1:]}
    entries = [
        {"match": {"purpose": "hin"}, "response": json.dumps(FIN_HEADERS)},
        {"match": {"purpose": "hid"}, "response": json.dumps(schema)},
        {"match": {"purpose": "construct-dsp"}, "response": json.dumps(reference_tree())},
        {"match": {"purpose": "direction"}, "response": "ROOT_TO_LEAF"},
        {"match": {"purpose": "select"}, "response": "[0]", "repeat": True},
        {"match": {"purpose": "check"}, "response": "READY\n5.27¢"},
        {"match": {"purpose": "program"}, "response": "get(['tree_table', 'Salaries, wages, and benefits', 'Year ended December 31, - 2019'])"},
    ]
    p = tmp_path / "fin-transcript.json"
    p.write_text(json.dumps({"entries": entries}), encoding="utf-8")
    return p


def test_cli_build_ask_evaluate(tmp_path, capsys):
    table = tmp_path / "fin.json"
    table.write_text(json.dumps(FIN_HEADER_ROWS + FIN_ROWS), encoding="utf-8")
    script = fin_transcript(tmp_path)
    cache = tmp_path / "fin.tree.json"
    assert cli.main(["build-tree", "--input", str(table), "--out", str(cache), "--transcript", str(script)]) == 0
    built = json.loads(capsys.readouterr().out)
    assert built["mode"] == "DSP" and built["report"]["coverage"] == 1.0
    doc = read_cache(cache.read_bytes())
    assert doc.tree == reference_tree() and doc.header["table_id"] == "fin"

    q = "What were salaries per ASM in 2019?"
    prog = tmp_path / "prog.txt"
    code = cli.main(["ask", "--tree", str(cache), "--question", q, "--transcript", str(script), "--program-out", str(prog)])
    out = json.loads(capsys.readouterr().out)
    assert code == 0 and out["answer"] == "5.27¢" and out["source"] == "agree"
    assert "Salaries" in prog.read_text(encoding="utf-8")

    assert cli.main(["evaluate", "--tree", str(cache), "--table", str(table)]) == 0
    assert json.loads(capsys.readouterr().out)["action"] == "Accept"
    bad = tmp_path / "bad.tree.json"
    bad.write_bytes(serialize_cache(baseline_tree()))
    code = cli.main(["evaluate", "--tree", str(bad), "--table", str(table), "--set", "refinement.coverage_threshold=0.95"])
    assert code == 1
    assert json.loads(capsys.readouterr().out)["action"] == "SupplementCoverage"


def test_cli_ask_symbolic_only(tmp_path, capsys):
    cache = tmp_path / "t.json"
    cache.write_bytes(serialize_cache({"r": {"a": "1", "b": "2"}}))
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{"match": {"purpose": "program"}, "response": "sum(get(['r']))"}]), encoding="utf-8")
    assert cli.main(["ask", "--tree", str(cache), "--question", "sum?", "--mode", "symbolic", "--transcript", str(script)]) == 0
    assert json.loads(capsys.readouterr().out)["answer"] == "3"


def test_cli_ask_textual_forced(tmp_path, capsys):
    cache = tmp_path / "t.json"
    cache.write_bytes(serialize_cache({"r": {"a": "1"}}))
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{"match": {"purpose": "filter"}, "response": "[0]"}, {"match": {"purpose": "check"}, "response": "READY\n1"}]), encoding="utf-8")
    args = ["ask", "--tree", str(cache), "--question", "a?", "--mode", "textual", "--force-direction", "l2r", "--no-embeddings", "--transcript", str(script)]
    assert cli.main(args) == 0
    assert json.loads(capsys.readouterr().out)["textual"]["direction"] == "LeafToRoot"


def test_cli_bench_and_errors(tmp_path, capsys):
    data, script = write_suite(tmp_path / "suite")
    report = tmp_path / "report.json"
    args = ["bench", "--dataset", str(data), "--cache-dir", str(tmp_path / "c"), "--report", str(report), "--transcript", str(script)]
    assert cli.main(args) == 0
    assert json.loads(report.read_text(encoding="utf-8"))["aggregate"]["n_tables"] == N_TABLES
    capsys.readouterr()
    assert cli.main(["evaluate", "--tree", str(tmp_path / "missing.json"), "--table", str(data)]) == 2
    with pytest.raises(SystemExit):
        cli.main(["ask"])
