import csv
import json

import pytest

from btq.cli import main

from .conftest import CONFIGS

SQRT97 = str(CONFIGS / "sqrt97.json")
PHI31 = str(CONFIGS / "phi31.json")


@pytest.fixture(scope="module")
def graph_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    out = d / "g.json"
    assert main(["fundom", SQRT97, "--out", str(out), "--deterministic", "--verify", "--dot", str(d / "g.dot")]) == 0
    return out


def test_fundom_output(graph_file):
    data = json.loads(graph_file.read_text())
    assert data["graph"]["genus"] == 5
    assert data["graph"]["stats"]["time_ms"] == 0
    assert data["verified_pairings"] > 0
    assert (graph_file.parent / "g.dot").read_text().startswith("// genus 5")


def test_fundom_deterministic_bytes(graph_file, tmp_path):
    again = tmp_path / "g.json"
    assert main(["fundom", SQRT97, "--out", str(again), "--deterministic", "--verify"]) == 0
    assert again.read_bytes() == graph_file.read_bytes()


def test_limit_exit_code(tmp_path):
    assert main(["fundom", SQRT97, "--max-genus", "1", "--out", str(tmp_path / "x.json")]) == 3


def test_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"field": {"poly": [1, 0, 1]}, "prime": {"p": 3, "r": 1}}))
    assert main(["fundom", str(bad)]) == 2
    assert main(["check", str(tmp_path / "missing.json")]) == 2


def test_reduce_round_trip(graph_file, capsys):
    capsys.readouterr()
    assert main(["reduce", SQRT97, str(graph_file), "[[3,0],[1,81]]", "--verify"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verified"] and out["distance"] == 6
    assert main(["reduce", SQRT97, str(graph_file), json.dumps(out["reduced"]), "--verify"]) == 0
    again = json.loads(capsys.readouterr().out)
    assert again["reduced"] == out["reduced"] and again["lookups"] == 0


def test_reduce_vertex_and_bad_matrix(graph_file, capsys):
    assert main(["reduce", SQRT97, str(graph_file), "[[9,0],[4,27]]", "--vertex", "--verify"]) == 0
    assert json.loads(capsys.readouterr().out)["verified"]
    assert main(["reduce", SQRT97, str(graph_file), "[[1,2]]"]) == 2
    assert main(["reduce", PHI31, str(graph_file), "[[1,0],[0,1]]"]) == 2


def test_check_with_graph(graph_file, capsys):
    assert main(["check", SQRT97, "--graph", str(graph_file)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["genus"] == 5 and info["verified_pairings"] > 0


def test_bench_empty_and_small(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", PHI31, "--samples", "0", "--out", str(out)]) == 0
    assert out.read_text().strip() == "distance,min_ms,q1,median,q3,max_ms"
    assert main(["bench", PHI31, "--samples", "3", "--distances", "2,4", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["distance"] for r in rows] == ["2", "4"]
    assert all(float(r["min_ms"]) <= float(r["median"]) <= float(r["max_ms"]) for r in rows)


def test_tabulate_command(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    rc = main(["tabulate", "--labels", "2.2.5.1", "--max-genus", "0", "--out", str(out), "--deterministic"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("degree 2: ")
    assert json.loads((tmp_path / "t.summary.json").read_text())["status"]["error"] == 0
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"g_max": -2}))
    assert main(["tabulate", "--config", str(bad)]) == 2
