import hashlib
import json
import os
import subprocess
import sys

import pytest

from conftest import CONFIGS, ROOT
from pathtrace import cli


def run(*args):
    return cli.main(list(map(str, args)))


def test_problems_lists_every_id(capsys):
    assert run("problems") == 0
    out = capsys.readouterr().out
    for pid in ("fa", "fe_inv", "cross", "bratu", "manufactured"):
        assert pid in out


def test_improved_run_writes_files_and_exits_zero(tmp_path, capsys):
    assert run("run", CONFIGS / "fa_improved.json", "--out", tmp_path / "o") == 0
    assert {p.name for p in (tmp_path / "o").iterdir()} == {"points.csv", "events.csv", "summary.json"}
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["completed"] and summary["lambda_max"] >= 299.9
    assert "lambda left window" in capsys.readouterr().out


def test_mode_flag_overrides_the_file(tmp_path):
    assert run("run", CONFIGS / "fa_improved.json", "--mode", "standard", "--out", tmp_path) == 2
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["reason"] == "h exhausted at h_min" and summary["mode"] == "standard"


def test_config_error_exits_one_without_output(tmp_path, capsys):
    out = tmp_path / "never"
    assert run("run", CONFIGS / "fa_improved.json", "--c-min", "1.5", "--out", out) == 1
    assert not out.exists()
    assert "c_min" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"problem": "fa", "delta_crit": 1.0}))
    assert run("run", bad, "--out", out) == 1 and not out.exists()


def test_unreachable_start_is_a_config_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "fa", "lambda0": 400.0}))
    assert run("run", cfg, "--out", tmp_path / "o") == 1
    assert not (tmp_path / "o").exists()


def test_unwritable_output_exits_one(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("run", CONFIGS / "cross_improved.json", "--out", blocker / "sub") == 1


def test_safeguard_and_fem_flags_reach_the_config(tmp_path):
    assert run("run", CONFIGS / "bratu_improved.json", "--mesh-elems", "8", "--gamma", "50",
               "--delta-maxU", "0.03", "--delta-crit", "0.04", "--deflation-period", "3",
               "--deflation-power", "2.5", "--deflation-shift", "0.5", "--mode", "standard",
               "--out", tmp_path) == 0
    cfg = json.loads((tmp_path / "summary.json").read_text())["config"]
    assert (cfg["mesh_elems"], cfg["gamma"], cfg["delta_maxU"], cfg["delta_crit"]) == (8, 50.0, 0.03, 0.04)
    assert (cfg["deflation_period"], cfg["deflation_power"], cfg["deflation_shift"]) == (3, 2.5, 0.5)


def test_every_safeguard_field_has_a_flag():
    help_text = cli.build_parser()._subparsers._group_actions[0].choices["run"].format_help()
    for flag in ("--delta-maxU", "--delta-maxL", "--delta-crit", "--c-min", "--eps-lambda",
                 "--eps-lambda-star", "--delta-lambda", "--eps-diff"):
        assert flag in help_text


def test_seed_env_is_recorded(tmp_path, monkeypatch):
    monkeypatch.setenv("PATHTRACE_SEED", "5")
    assert run("run", CONFIGS / "cross_improved.json", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "summary.json").read_text())["seed"] == 5


def test_console_script_matches_in_process_run(tmp_path):
    env = dict(os.environ, PATHTRACE_NUMBA="1")
    proc = subprocess.run([sys.executable, "-m", "pathtrace.cli", "run", str(CONFIGS / "fc_improved.json"),
                           "--out", str(tmp_path / "a")], capture_output=True, text=True, env=env, cwd=ROOT)
    assert proc.returncode == 0, proc.stderr
    assert run("run", CONFIGS / "fc_improved.json", "--out", tmp_path / "b") == 0
    digest = lambda d: hashlib.sha256((tmp_path / d / "points.csv").read_bytes()).hexdigest()
    assert digest("a") == digest("b")
