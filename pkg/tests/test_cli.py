import json

import pytest
from click.testing import CliRunner

from moheat.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def hot_file(tmp_path):
    path = tmp_path / "hot_full_1s.json"
    path.write_text(
        json.dumps({"type": "hot", "intensity": 1.0, "duration_ms": 1000, "delay_ms": 0})
    )
    return str(path)


@pytest.fixture
def bad_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        json.dumps({"type": "cold", "intensity": 2.0, "duration_ms": 1000, "delay_ms": 0})
    )
    return str(path)


# -- decode ----------------------------------------------------------------------


def test_decode_all_off(runner):
    result = runner.invoke(main, ["decode", "AA030003"])
    assert result.exit_code == 0
    assert result.stdout == "AllOff\n"


def test_decode_accepts_whitespace_and_case(runner):
    result = runner.invoke(main, ["decode", "aa 01 01 ff FF"])
    assert result.exit_code == 0
    assert result.stdout == "SetColdDuty duty=255\n"


def test_decode_reports_diagnostics_on_stderr(runner):
    result = runner.invoke(main, ["decode", "AA030099AA040004"])
    assert result.exit_code == 0
    assert result.stdout == "Ping\n"
    assert "checksum" in result.stderr


def test_decode_bad_hex_is_usage_error(runner):
    result = runner.invoke(main, ["decode", "zz"])
    assert result.exit_code == 2


# -- compile ----------------------------------------------------------------------


def test_compile_writes_timeline_json(runner, hot_file):
    result = runner.invoke(main, ["compile", hot_file])
    assert result.exit_code == 0
    doc = json.loads(result.stdout)
    assert doc["total_ms"] == 1000
    assert doc["entries"][0]["actions"] == [{"kind": "set_hot", "intensity": 1.0}]


def test_compile_deterministic(runner, hot_file):
    first = runner.invoke(main, ["compile", hot_file]).stdout
    second = runner.invoke(main, ["compile", hot_file]).stdout
    assert first == second


def test_compile_to_file(runner, hot_file, tmp_path):
    out = tmp_path / "tl.json"
    result = runner.invoke(main, ["compile", hot_file, "--out", str(out)])
    assert result.exit_code == 0
    assert json.loads(out.read_text())["total_ms"] == 1000


def test_compile_invalid_pattern_exit_2(runner, bad_file):
    result = runner.invoke(main, ["compile", bad_file])
    assert result.exit_code == 2
    assert "intensity" in result.stderr


def test_compile_missing_file_exit_2(runner):
    result = runner.invoke(main, ["compile", "/nope/missing.json"])
    assert result.exit_code == 2


# -- simulate ---------------------------------------------------------------------


def test_simulate_csv_final_row(runner, hot_file):
    result = runner.invoke(main, ["simulate", hot_file, "--lambda", "0", "--csv", "-"])
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "t_ms,temp_c,cold_duty,hot_duty"
    assert lines[-1] == "1000,33.6000,0,0"
    assert len(lines) == 102  # header + 101 samples


def test_simulate_deterministic(runner, hot_file):
    args = ["simulate", hot_file, "--lambda", "0.05", "--csv", "-"]
    assert runner.invoke(main, args).stdout == runner.invoke(main, args).stdout


def test_simulate_to_file(runner, hot_file, tmp_path):
    out = tmp_path / "trace.csv"
    result = runner.invoke(main, ["simulate", hot_file, "--csv", str(out)])
    assert result.exit_code == 0
    assert out.read_bytes().startswith(b"t_ms,temp_c,cold_duty,hot_duty\n")


def test_simulate_invalid_pattern_exit_2(runner, bad_file):
    result = runner.invoke(main, ["simulate", bad_file])
    assert result.exit_code == 2


def test_simulate_dt_flag(runner, hot_file):
    result = runner.invoke(
        main, ["simulate", hot_file, "--dt", "100", "--lambda", "0", "--csv", "-"]
    )
    lines = result.stdout.strip().splitlines()
    assert len(lines) == 12  # header + 11 samples at dt=100


# -- play -------------------------------------------------------------------------


def test_play_virtual_short_pattern(runner, tmp_path):
    path = tmp_path / "blip.json"
    path.write_text(
        json.dumps({"type": "cold", "intensity": 1.0, "duration_ms": 120, "delay_ms": 0})
    )
    result = runner.invoke(main, ["play", str(path), "--device", "virtual"])
    assert result.exit_code == 0
    assert "done" in result.stderr
    assert "13 samples" in result.stderr  # 120 ms at dt=10


def test_play_unknown_device_exit_2(runner, hot_file):
    result = runner.invoke(main, ["play", hot_file, "--device", "warp-drive"])
    assert result.exit_code == 2


def test_play_missing_serial_device_exit_1(runner, hot_file):
    result = runner.invoke(
        main, ["play", hot_file, "--device", "serial:/dev/does-not-exist-7761"]
    )
    assert result.exit_code == 1


# -- usage ------------------------------------------------------------------------


def test_unknown_flag_exit_2_with_usage(runner):
    result = runner.invoke(main, ["decode", "--frobnicate", "AA030003"])
    assert result.exit_code == 2
    assert "Usage" in result.stderr


def test_unknown_subcommand_exit_2(runner):
    result = runner.invoke(main, ["transmogrify"])
    assert result.exit_code == 2
