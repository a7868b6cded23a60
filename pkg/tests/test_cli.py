import json

import pytest
from click.testing import CliRunner

from scribe.cli import main
from scribe.experiment import ExperimentLog


@pytest.fixture
def runner():
    return CliRunner()


def test_simulate_replay_report_flow(runner, tmp_path, monkeypatch):
    monkeypatch.setenv("SCRIBE_DATA_DIR", str(tmp_path))
    res = runner.invoke(
        main,
        ["simulate", "--users", "2", "--sessions", "2", "--condition", "adapt",
         "--seed", "4"],
    )
    assert res.exit_code == 0, res.output
    log_path = tmp_path / "log.jsonl"
    proto_path = tmp_path / "p0.json"
    assert log_path.exists() and proto_path.exists()
    log = ExperimentLog.load(log_path)
    assert len(log) == 2 * 2 * 26
    assert {r.condition for r in log.records} == {"adapt"}

    res = runner.invoke(
        main,
        ["replay", "--log", str(log_path), "--prototypes", str(proto_path),
         "--out", str(tmp_path / "replayed.jsonl")],
    )
    assert res.exit_code == 0, res.output
    replayed = ExperimentLog.load(tmp_path / "replayed.jsonl")
    assert all(r.condition == "fixed" and r.generation == 0 for r in replayed.records)

    res = runner.invoke(main, ["report", "--log", str(log_path), "--group", "session"])
    assert res.exit_code == 0, res.output
    lines = [json.loads(line) for line in res.output.strip().splitlines()]
    assert len(lines) == 2 * 2
    assert all("rate_ll" in line for line in lines)


def test_report_grouping_by_character(runner, tmp_path, monkeypatch):
    monkeypatch.setenv("SCRIBE_DATA_DIR", str(tmp_path))
    res = runner.invoke(
        main,
        ["simulate", "--users", "1", "--sessions", "1", "--condition", "adapt",
         "--seed", "9"],
    )
    assert res.exit_code == 0, res.output
    res = runner.invoke(
        main, ["report", "--log", str(tmp_path / "log.jsonl"), "--group", "character"]
    )
    assert res.exit_code == 0, res.output
    lines = [json.loads(line) for line in res.output.strip().splitlines()]
    assert len(lines) == 26
    assert {line["character"] for line in lines} == set("abcdefghijklmnopqrstuvwxyz")
