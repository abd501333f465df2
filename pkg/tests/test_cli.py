import io
import json
import subprocess
import sys

import pytest

from tempagent.cli import main
from tempagent.frames import Cluster, FrameSpec
from tempagent.modelfile import save_model
from tempagent.semantics import Model


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cluster_model(tmp_path):
    path = tmp_path / "m.json"
    save_model(Model(FrameSpec(1, (Cluster.single("ab"),)), {1: {"t0.a"}}), path)
    return str(path)


def test_parse(capsys):
    code, out, _ = run(capsys, "parse", "x1->x1")
    assert code == 0
    assert out.splitlines()[0] == "x1 -> x1"
    assert "size: 3" in out


def test_parse_json_metrics(capsys):
    code, out, _ = run(capsys, "parse", "K1 x1 & N x2", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["formula"] == "K1 x1 & N x2" and data["max_agent"] == 1


def test_parse_syntax_error(capsys):
    code, _, err = run(capsys, "parse", "Unc x1 &")
    assert code == 2
    assert "column 9" in err


def test_parse_stdin_and_file(capsys, monkeypatch, tmp_path):
    monkeypatch.setattr(sys, "stdin", io.StringIO("N x1\n"))
    assert run(capsys, "parse", "-")[1].startswith("N x1")
    f = tmp_path / "f.txt"
    f.write_text("~x2")
    assert run(capsys, "parse", "--file", str(f))[1].startswith("~x2")
    assert run(capsys, "parse", "--file", str(tmp_path / "nope"))[0] == 3


def test_usage_errors(capsys):
    assert run(capsys, "parse")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "sat", "x1", "--bounds", "1,2")[0] == 2
    assert run(capsys, "sat", "x1", "--bounds", "0,1,1,1")[0] == 2
    assert run(capsys, "eval", "x1")[0] == 2


def test_eval(capsys, cluster_model):
    code, out, _ = run(capsys, "eval", "--model", cluster_model, "Unc x1", "--format", "json")
    assert code == 0
    assert json.loads(out)["truth"] == {"t0.a": True, "t0.b": True}
    code, out, _ = run(capsys, "eval", "--model", cluster_model, "true")
    assert code == 0 and out.split() == ["t0.a", "1", "t0.b", "1"]
    code, out, _ = run(capsys, "eval", "--model", cluster_model, "--oracle", "K1 x1", "--format", "json")
    assert json.loads(out)["truth"] == {"t0.a": False, "t0.b": False}


def test_eval_missing_model(capsys, tmp_path):
    assert run(capsys, "eval", "--model", str(tmp_path / "missing.json"), "x1")[0] == 3


def test_eval_agent_mismatch(capsys, cluster_model):
    assert run(capsys, "eval", "--model", cluster_model, "K2 x1")[0] == 3


def test_valid(capsys, cluster_model):
    assert run(capsys, "valid", "--model", cluster_model, "K1 x1 -> x1")[0] == 0
    code, out, _ = run(capsys, "valid", "--model", cluster_model, "x1 -> K1 x1")
    assert code == 1 and "t0.a" in out


def test_bridge_gaps_flag(capsys, tmp_path):
    path = tmp_path / "gap.json"
    save_model(Model(FrameSpec(1, (Cluster.single("a"), Cluster.single("b")), ((),)), {1: {"t1.b"}}), path)
    on = json.loads(run(capsys, "eval", "--model", str(path), "D1 x1", "--format", "json")[1])
    off = json.loads(run(capsys, "eval", "--model", str(path), "D1 x1", "--format", "json",
                         "--bridge-gaps", "false")[1])
    assert on["truth"]["t0.a"] is True and off["truth"]["t0.a"] is False


def test_theorem(capsys):
    code, out, _ = run(capsys, "theorem", "K1 x1 -> x1")
    assert code == 0
    assert "no countermodel within bounds" in out
    code, out, _ = run(capsys, "theorem", "x1 -> K1 x1", "--format", "json")
    assert code == 1 and json.loads(out)["verdict"] == "witness"


def test_sat_witness_feeds_eval(capsys, tmp_path):
    code, out, _ = run(capsys, "sat", "Unc x1", "--format", "json")
    assert code == 0
    data = json.loads(out)
    path = tmp_path / "w.json"
    path.write_text(json.dumps(data["model"]))
    code, out, _ = run(capsys, "eval", "--model", str(path), "Unc x1", "--format", "json")
    assert json.loads(out)["truth"][data["state"]] is True
    assert run(capsys, "sat", "x1 & ~x1")[0] == 1


def test_search_flags(capsys):
    code, out, _ = run(capsys, "theorem", "N x1 -> x1", "--bounds", "1,1,0,1", "--no-loop", "--format", "json")
    data = json.loads(out)
    assert data["bounds"]["allow_loop"] is False and data["bounds"]["max_time_clusters"] == 1
    assert code == 1
    code, out, _ = run(capsys, "sat", "K2 x1", "--agents", "3", "--format", "json", "--jobs", "2")
    assert code == 0 and json.loads(out)["model"]["agents"] == 3


def test_cap(capsys, monkeypatch):
    code, _, err = run(capsys, "theorem", "Today x1 -> x1", "--cap", "10")
    assert code == 4 and "cap of 10" in err
    monkeypatch.setenv("TEMPAGENT_CAP", "10")
    assert run(capsys, "theorem", "Today x1 -> x1")[0] == 4


def test_nf(capsys):
    code, out, _ = run(capsys, "nf", "x1->x1 |- x1", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["conclusion"] == "x1" and len(data["disjuncts"]) >= 1
    assert run(capsys, "nf", "x1 |-")[0] == 2


def test_rule_check(capsys, cluster_model):
    assert run(capsys, "rule-check", "x1 |- x1")[0] == 0
    assert run(capsys, "rule-check", "x1 -> x1 |- x1", "--rnf")[0] == 1
    assert run(capsys, "rule-check", "x1 -> x1 |- x1", "--model", cluster_model)[0] == 1
    assert run(capsys, "rule-check", "x1 -> x1 |- true", "--model", cluster_model)[0] == 0


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tempagent.cli", "parse", "K1 x1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("K1 x1")
