import csv
import json
import os
import subprocess
from pathlib import Path

import pytest

import mvnav

BIN = os.environ.get("MVNAV_BIN", "mvnav")


def run(*args, check=True):
    return subprocess.run([BIN, *args], capture_output=True, text=True, check=check)


def test_version():
    out = run("--version").stdout.strip()
    assert out.startswith("mvnav " + mvnav.__version__)


def test_unknown_map_fails():
    r = run("ingest", "--map", "/no/such.png", "--out", "x.mvgrid", check=False)
    assert r.returncode != 0
    assert r.stderr


def test_pipeline(tmp_path: Path):
    grid = tmp_path / "corridor.mvgrid"
    run("ingest", "--map", "benchmark:corridor", "--out", str(grid))
    assert grid.exists()

    ckpt = tmp_path / "ppo.json"
    curve = tmp_path / "curve.csv"
    run("train", "--algo", "ppo", "--map", str(grid), "--total-steps", "4096",
        "--out", str(ckpt), "--curve", str(curve))
    assert json.loads(ckpt.read_text())
    assert curve.read_text().startswith("env_steps")

    group = tmp_path / "runs"
    r = run("eval", "--ckpt", str(ckpt), "--map", str(grid), "--episodes", "6",
            "--deterministic", "--traj-out", str(group))
    assert "success" in r.stdout.lower()
    logs = sorted(group.glob("*.csv"))
    assert len(logs) == 6

    # two groups for the report
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    for i, path in enumerate(logs):
        (a if i % 2 == 0 else b).joinpath(path.name).write_text(path.read_text())
    out = tmp_path / "report.csv"
    r = run("report", "--group-a", str(a), "--group-b", str(b), "--out", str(out), check=False)
    if r.returncode == 0:
        rows = list(csv.reader(out.open()))
        assert rows[0][0] == "metric"
        assert [row[0] for row in rows[1:]] == ["Va", "TOC", "G", "S", "C"]
    else:
        # short failed episodes can leave too few usable samples
        assert r.stderr


def test_replay_cli(tmp_path: Path):
    s = mvnav.Session("benchmark:corridor", "builtin:straight", seed=2)
    s.handle_message(json.dumps({"type": "start"}))
    for _ in range(20):
        s.tick()
    rec = tmp_path / "recording.json"
    rec.write_text(s.recording_json())
    out = tmp_path / "log.csv"
    run("replay", "--record", str(rec), "--out", str(out))
    assert out.read_text() == s.session_log_csv()
