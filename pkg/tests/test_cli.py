from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qtoda.cli import main
from qtoda.qbessel import macdonald_K
from qtoda.qcalc import QContext


def run(tmp_path, *args, fmt="json"):
    out = tmp_path / f"out.{fmt}"
    code = main([*args, "--format", fmt, "--out", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def test_eval_single_point_is_bit_exact(tmp_path):
    code, text = run(tmp_path, "eval", "K", "--q", "0.5", "--delta", "1", "--nu", "0.8", "--x0", "1.3", "--lo", "0", "--hi", "0", fmt="csv")
    assert code == 0
    rows = list(csv.DictReader(text.splitlines()))
    ref = macdonald_K(QContext(0.5, 1, 1.0, 0.8), 1.3).value
    assert len(rows) == 1
    assert float(rows[0]["re"]) == ref.real and float(rows[0]["im"]) == ref.imag


def test_eval_I_default_grid(tmp_path):
    code, text = run(tmp_path, "eval", "I", "--delta", "0")
    assert code == 0
    rep = json.loads(text)
    assert len(rep["rows"]) == 41
    xs = [r["x"] for r in rep["rows"]]
    assert np.all(np.diff(xs) < 0)
    assert all(r["converged"] for r in rep["rows"])
    assert rep["config"]["function"] == "I" and rep["checks"] == []


def test_csv_and_json_carry_the_same_numbers(tmp_path):
    args = ("eval", "psiL", "--lo", "-3", "--hi", "3")
    _, js = run(tmp_path, *args)
    _, cs = run(tmp_path, *args, fmt="csv")
    rows = list(csv.DictReader(cs.splitlines()))
    for a, b in zip(json.loads(js)["rows"], rows):
        assert float(b["re"]) == a["re"] and float(b["im"]) == a["im"] and float(b["x"]) == a["x"]


def test_output_is_deterministic(tmp_path):
    args = ("eval", "xi1", "--lo", "-5", "--hi", "5")
    assert run(tmp_path, *args) == run(tmp_path, *args)


def test_eval_nonconvergence_exit_code(tmp_path):
    code, text = run(tmp_path, "eval", "xi2", "--delta", "2", "--lo", "0", "--hi", "1")
    assert code == 3
    assert not any(r["converged"] for r in json.loads(text)["rows"])


@pytest.mark.parametrize("delta", [0, 1, 2])
def test_verify_toda_passes(tmp_path, delta):
    code, text = run(tmp_path, "verify", "toda", "--delta", str(delta))
    assert code == 0
    assert all(c["status"] == "pass" for c in json.loads(text)["checks"])


def test_verify_wrong_eigenvalue_fails(tmp_path):
    code, text = run(tmp_path, "verify", "toda", "--eigenvalue", "1")
    assert code == 1
    assert all(c["worst_residual"] > 0.1 for c in json.loads(text)["checks"])


@pytest.mark.parametrize("delta", [0, 1, 2])
def test_verify_wronskian_passes(tmp_path, delta):
    code, _ = run(tmp_path, "verify", "wronskian", "--delta", str(delta), "--q", "0.9")
    assert code == 0


def test_verify_hopf_passes(tmp_path):
    code, text = run(tmp_path, "verify", "hopf")
    assert code == 0
    checks = json.loads(text)["checks"]
    assert checks and all(c["status"] == "pass" for c in checks)


def test_verify_mellin_reports_disagreement(tmp_path):
    code, text = run(tmp_path, "verify", "mellin")
    checks = {c["check"]: c for c in json.loads(text)["checks"]}
    assert checks["g(s) recurrence at 20 points"]["status"] == "pass"
    assert checks["lowering ladder identity"]["status"] == "pass"
    assert code in (1, 3)


def test_verify_whittaker_reports_divergent_integral(tmp_path):
    code, text = run(tmp_path, "verify", "whittaker")
    checks = json.loads(text)["checks"]
    assert code == 3
    assert [c["status"] for c in checks[:3]] == ["pass", "pass", "pass"]


def test_mellin_compare_excludes_delta_two(tmp_path):
    code, text = run(tmp_path, "mellin-compare", "--delta", "2", "--lo", "0", "--hi", "2")
    assert code == 0
    assert {r["status"] for r in json.loads(text)["rows"]} == {"excluded from default comparison"}


def test_mellin_compare_one_point(tmp_path):
    code, text = run(tmp_path, "mellin-compare", "--nu", "0.8", "--lo", "0", "--hi", "0", fmt="csv")
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 1
    assert rows[0]["status"] in ("pass", "fail")
    assert code == (0 if rows[0]["status"] == "pass" else 1)


def test_usage_errors(tmp_path, capsys):
    assert main(["eval", "nope"]) == 2
    assert main(["eval", "K", "--lo", "3", "--hi", "1"]) == 2
    assert main(["eval", "K", "--q", "1.5"]) == 2
    assert main(["verify", "wronskian", "--hi", "-1"]) == 2


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"q": 0.3, "nu": 1.3, "lo": -2, "hi": 2}))
    code, text = run(tmp_path, "eval", "K", "--config", str(cfg), "--nu", "0.7")
    rep = json.loads(text)
    assert code == 0
    assert rep["config"]["q"] == 0.3 and rep["config"]["nu"] == 0.7 and len(rep["rows"]) == 5


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"qq": 0.3}))
    assert main(["eval", "K", "--config", str(cfg)]) == 2
    assert main(["eval", "K", "--config", str(tmp_path / "missing.json")]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qtoda.cli", "eval", "g_of_s", "--lo", "0", "--hi", "1", "--x0", "2"], capture_output=True, text=True)
    assert res.returncode == 0
    assert len(json.loads(res.stdout)["rows"]) == 2
