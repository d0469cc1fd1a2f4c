"""CLI exit codes and report determinism."""

import json

import pytest

from scftwin.cli import main

SCENARIO = {
    "seed": 42,
    "name": "cli-test",
    "stakeholders": ["s1", "s2", "s3"],
    "trade_graph": [
        {"supplier": "s1", "buyer": "s2", "intensity": "0.5"},
        {"supplier": "s2", "buyer": "s3", "intensity": "0.4"},
        {"supplier": "s3", "buyer": "s1", "intensity": "0.3"},
    ],
    "ticks": 30,
    "payment_behavior": {
        "s1": {"on_time": "0.8", "late": "0.1", "default": "0.1"},
        "s2": {"on_time": "0.9", "late": "0.1", "default": "0"},
        "s3": {"on_time": "1", "late": "0", "default": "0"},
    },
}


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(SCENARIO))
    return path


def test_run_writes_report(tmp_path, scenario_file):
    out = tmp_path / "report.json"
    code = main(["run", "--scenario", str(scenario_file), "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["schema_version"] == 1
    assert report["conservation"]["ok"]
    assert report["chain_height"] > 0


def test_run_malformed_scenario_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    code = main(["run", "--scenario", str(bad), "--out", str(tmp_path / "r.json")])
    assert code == 2
    assert "invalid scenario" in capsys.readouterr().err


def test_same_seed_byte_identical_reports(tmp_path, scenario_file):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["run", "--scenario", str(scenario_file), "--out", str(out1)]) == 0
    assert main(["run", "--scenario", str(scenario_file), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_seed_override_changes_report(tmp_path, scenario_file):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["run", "--scenario", str(scenario_file), "--out", str(out1)]) == 0
    assert main(["run", "--scenario", str(scenario_file), "--seed", "7", "--out", str(out2)]) == 0
    assert json.loads(out1.read_text())["tip_hash"] != json.loads(out2.read_text())["tip_hash"]


def test_verify_ledger_clean_exit_0(tmp_path, scenario_file, capsys):
    data = tmp_path / "data"
    assert main(["run", "--scenario", str(scenario_file), "--out", str(tmp_path / "r.json"), "--data", str(data)]) == 0
    assert main(["verify-ledger", "--data", str(data)]) == 0
    assert "ok" in capsys.readouterr().out


def test_verify_ledger_flipped_byte_exit_4(tmp_path, scenario_file, capsys):
    import base64

    data = tmp_path / "data"
    main(["run", "--scenario", str(scenario_file), "--out", str(tmp_path / "r.json"), "--data", str(data)])
    log = data / "blocks.log"
    lines = log.read_bytes().splitlines(keepends=True)
    decoded = bytearray(base64.b64decode(lines[3]))
    decoded[len(decoded) // 2] ^= 0x01
    lines[3] = base64.b64encode(bytes(decoded)) + b"\n"
    log.write_bytes(b"".join(lines))
    code = main(["verify-ledger", "--data", str(data)])
    assert code == 4
    assert "height 3" in capsys.readouterr().out


def test_verify_ledger_missing_dir_exit_2(tmp_path):
    assert main(["verify-ledger", "--data", str(tmp_path / "nope")]) == 2


def test_report_replays_persisted_run(tmp_path, scenario_file):
    data = tmp_path / "data"
    out1 = tmp_path / "r1.json"
    assert main(["run", "--scenario", str(scenario_file), "--out", str(out1), "--data", str(data)]) == 0
    out2 = tmp_path / "r2.json"
    assert main(["report", "--data", str(data), "--out", str(out2)]) == 0
    a = json.loads(out1.read_text())
    b = json.loads(out2.read_text())
    assert a["tip_hash"] == b["tip_hash"]
    assert a["final_indices"] == b["final_indices"]
    assert a["conservation"] == b["conservation"]


def test_report_missing_dir_exit_2(tmp_path):
    assert main(["report", "--data", str(tmp_path / "nothing")]) == 2
