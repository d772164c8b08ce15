from __future__ import annotations

import csv
import json

import pytest

from sobopatch import acceptance
from sobopatch.cli import main
from sobopatch.graph import build_graph, write_graph


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


def load(path):
    with open(path) as fh:
        return json.load(fh)


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.txt"
    write_graph(build_graph([1, 1, 1], [(0, 1), (1, 2)]), path)
    return path


def test_graph_command(tmp_path, graph_file):
    code, out = run(tmp_path, "graph", "--input", str(graph_file), "--kind", "isoperimetric")
    assert code == 0
    doc = load(out / "graph_report.json")
    assert doc["constant"]["constant"] == pytest.approx(2.0)


def test_cover_command(tmp_path):
    code, out = run(tmp_path, "cover", "--fixture", "cactus")
    assert code == 0
    assert (out / "covering.json").exists()


def test_patch_command(tmp_path):
    code, out = run(tmp_path, "patch", "--fixture", "chain64")
    assert code == 0
    doc = load(out / "certificate.json")
    assert doc["certificate"]["status"] == "certified"
    assert doc["seed"] == 0


def test_manifold_command(tmp_path):
    code, out = run(tmp_path, "manifold", "--kind", "schwarzschild", "--n", "4", "--rmax", "1e3")
    assert code == 0
    with open(out / "profile.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert max(abs(float(r["firstIntegral"])) for r in rows) <= 1e-9
    doc = load(out / "manifold.json")
    assert abs(doc["growth"]["nu"] - 3) <= 0.1
    assert (out / "volume.dat").exists() and (out / "riemann.dat").exists()


def test_analyze_command(tmp_path):
    code, out = run(tmp_path, "analyze", "--fixture", "euclid3", "--estimator", "hardy")
    assert code == 0
    doc = load(out / "analysis.json")
    assert doc["bound_type"] == "lower"
    assert (out / doc["witnessFile"]).exists() or (out / "witness.csv").exists()


def test_outputs_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        assert main(["patch", "--fixture", "ray", "--out", str(d)]) == 0
    assert (a / "certificate.json").read_bytes() == (b / "certificate.json").read_bytes()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"fixture": "ray", "kappa": 3.0}))
    code, out = run(tmp_path, "cover", "--config", str(cfg), "--kappa", "2.5")
    assert code == 0
    used = load(out / "cover_config.json")["config"]
    assert used["kappa"] == 2.5 and used["fixture"] == "ray"


@pytest.mark.parametrize(
    "args",
    [
        ["cover", "--fixture", "nope"],
        ["cover", "--kappa", "1.0", "--fixture", "ray"],
        ["patch", "--fixture", "ray", "--p", "2", "--k", "2"],
        ["cover", "--fixture", "ray", "--input", "x.txt"],
        ["graph", "--input", "does_not_exist.txt"],
    ],
)
def test_config_errors_exit_2(tmp_path, args):
    code, _ = run(tmp_path, *args)
    assert code == 2


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"fixture": "ray", "bogus": 1}))
    assert run(tmp_path, "cover", "--config", str(cfg))[0] == 2


def test_argparse_error_exit_2(tmp_path):
    assert main(["cover", "--kappa", "abc"]) == 2


def test_verify_subset(tmp_path, monkeypatch):
    monkeypatch.setattr(acceptance, "CRITERIA", [acceptance.criterion_9, acceptance.criterion_10])
    code, out = run(tmp_path, "verify")
    assert code == 0
    doc = load(out / "verify.json")
    assert doc["passed"] and [c["number"] for c in doc["criteria"]] == [9, 10]


def test_verify_failure_exit_1(tmp_path, monkeypatch):
    @acceptance._timed(99, "always fails")
    def bad():
        return False, "no", {}

    monkeypatch.setattr(acceptance, "CRITERIA", [bad])
    assert run(tmp_path, "verify")[0] == 1
