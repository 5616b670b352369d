from __future__ import annotations

import json
import subprocess
import sys

import pytest

from byzcast.cli import main
from byzcast.trace import Trace


def test_check_pass(capsys):
    assert main(["check", "--graph", "harary", "4", "8", "--f", "2"]) == 0
    out = capsys.readouterr().out
    assert "connectivity=4" in out and "min_degree=4" in out and out.strip().endswith("PASS")


def test_check_fail(capsys):
    assert main(["check", "--graph", "cycle", "5", "--f", "2"]) != 0
    assert capsys.readouterr().out.strip().endswith("FAIL")


def test_check_complete(capsys):
    assert main(["check", "--graph", "complete", "5", "--f", "2"]) == 0


def test_check_parse_error(capsys):
    assert main(["check", "--graph", "wheel", "5", "--f", "2"]) != 0
    assert "error" in capsys.readouterr().err


def test_gen_round_trips_through_check(tmp_path, capsys):
    out = tmp_path / "h.txt"
    assert main(["gen", "harary", "4", "8", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "8 16"
    assert main(["check", "--graph", str(out), "--f", "2"]) == 0


def test_gen_circulant(capsys):
    assert main(["gen", "circulant", "6", "1,2"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "6 12"


@pytest.mark.parametrize("argv,decided", [
    (["--graph", "complete", "5", "--f", "2", "--inputs", "00011", "--faulty", "3,4",
      "--adversary", "flip_body"], "000xx"),
    (["--graph", "cycle", "4", "--f", "1", "--inputs", "0101", "--faulty", "2",
      "--adversary", "crash_silent"], None),
    (["--graph", "cycle", "4", "--f", "1", "--inputs", "0000"], "0000"),
])
def test_run_flags(tmp_path, capsys, argv, decided):
    out = tmp_path / "t.json"
    assert main(["run", *argv, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "agreement=True validity=True termination=True" in text
    if decided:
        assert f"decisions={decided}" in text
    tr = Trace.from_json(out.read_text())
    assert tr.verdict.ok


def test_run_scenario_file_replays_bytes(tmp_path, capsys):
    sc = tmp_path / "s.json"
    sc.write_text(json.dumps({"graph": {"family": "complete", "params": [5]}, "f": 2, "inputs": "01101",
                              "faulty": [1, 2], "adversary": {"kind": "random_seeded", "seed": 3}}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", str(sc), "--out", str(a)]) == 0
    assert main(["run", str(sc), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_hypothesis_warning(capsys):
    code = main(["run", "--graph", "complete", "4", "--f", "2", "--inputs", "0110"])
    assert "hypothesis violated" in capsys.readouterr().err
    assert code == 0


def test_run_guardrail(capsys):
    assert main(["run", "--graph", "cycle", "11", "--f", "1", "--inputs", "0" * 11]) != 0
    assert "allow-large" in capsys.readouterr().err


def test_run_bad_inputs(capsys):
    assert main(["run", "--graph", "cycle", "4", "--f", "1", "--inputs", "01"]) != 0


def test_verify(tmp_path, capsys):
    t = tmp_path / "t.json"
    main(["run", "--graph", "cycle", "5", "--f", "1", "--inputs", "01011", "--faulty", "4",
          "--adversary", "path_forger", "--out", str(t)])
    v = tmp_path / "v.json"
    assert main(["verify", str(t), "--out", str(v)]) == 0
    doc = json.loads(v.read_text())
    assert doc["schema"] == "byzcast-verdict/1" and doc["agreement"]


def test_verify_flags_corruption(tmp_path, capsys):
    t = tmp_path / "t.json"
    main(["run", "--graph", "cycle", "4", "--f", "1", "--inputs", "0000", "--out", str(t)])
    doc = json.loads(t.read_text())
    doc["decisions"][0][1] = 1
    t.write_text(json.dumps(doc))
    assert main(["verify", str(t)]) == 1


def test_sweep_small(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"cells": [{"graph": {"family": "cycle", "params": [4]}, "f": 1,
                                        "adversaries": ["crash_silent", "flip_body"]}]}))
    out = tmp_path / "out"
    assert main(["sweep", str(m), "--out", str(out)]) == 0
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["runs"] == agg["passes"] == 5 * 2 * 16


def test_sweep_empty(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"cells": []}))
    assert main(["sweep", str(m)]) == 0
    agg = json.loads(capsys.readouterr().out)
    assert agg["runs"] == 0 and agg["cells"] == {}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "byzcast.cli", "check", "--graph", "complete", "5", "--f", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
