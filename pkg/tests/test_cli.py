import json
import subprocess
import sys

import pytest

from fasisac.cli import EXIT_ALL_FAILED, EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, _exit_for, main
from fasisac.sweep import ResultRow, read_csv

FAST = ["--set", "sweep.num_scenarios=2", "--set", "sweep.snr_db=[20]",
        "--set", "bcd.episodes_per_iter=1", "--set", "bcd.max_outer_iters=2",
        "--set", "env.episode_length=20", "--set", "agent.warmup=16", "--set", "agent.batch_size=16",
        "--set", "agent.actor_hidden=[16, 16]", "--set", "agent.critic_hidden=[16, 16]"]


def test_validate_config(tmp_path, capsys):
    assert main(["validate-config"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("ok ")
    bad = tmp_path / "bad.yaml"
    bad.write_text("system:\n  gamma: -3\n")
    assert main(["validate-config", "-c", str(bad)]) == EXIT_CONFIG
    assert "bad.yaml:2:3: system.gamma" in capsys.readouterr().err
    assert main(["validate-config", "-c", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["validate-config", "--set", "system.nope=1"]) == EXIT_CONFIG


def test_run_prints_csv(capsys):
    assert main(["run"] + FAST) == EXIT_OK
    rows = read_csv(capsys.readouterr().out)
    assert [r.method for r in rows] == ["fpa", "fas_bcd_drl"]


def test_sweep_and_baseline_files(tmp_path):
    assert main(["sweep"] + FAST + ["-o", str(tmp_path / "s")]) == EXIT_OK
    assert {p.name for p in (tmp_path / "s").iterdir()} == {"results.csv", "results.json", "results.svg"}
    assert main(["baseline"] + FAST + ["-o", str(tmp_path / "b")]) == EXIT_OK
    rows = read_csv(tmp_path / "b" / "results.csv")
    assert {r.method for r in rows} == {"fpa"}


def test_infeasible_sweep_exit_code(capsys):
    assert main(["baseline"] + FAST + ["--set", "system.gamma=100"]) == EXIT_ALL_FAILED
    assert "infeasible" in capsys.readouterr().out


def test_exit_code_mapping():
    ok = ResultRow(0, "fpa", 0.0, 1.0, 1.0)
    bad = ResultRow(1, "fpa", 0.0, 0.0, 0.0, status="infeasible")
    assert _exit_for([ok]) == EXIT_OK
    assert _exit_for([ok, bad]) == EXIT_PARTIAL
    assert _exit_for([bad]) == EXIT_ALL_FAILED


def test_train_then_eval(tmp_path, capsys):
    ck = tmp_path / "agent.ck"
    assert main(["train"] + FAST + ["--episodes", "2", "-o", str(ck)]) == EXIT_OK
    assert ck.exists()
    capsys.readouterr()
    assert main(["eval", str(ck)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["policy_rate"] is not None and out["fpa_rate"] > 0


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "fasisac.cli", "--version"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "fasisac" in out.stdout
