import json
import math
import subprocess
import sys

import numpy as np
import pytest

from sta_rabi.exceptions import ConfigError
from sta_rabi.experiments import cli
from sta_rabi.experiments.config import Scenario, load_config, parse_config
from sta_rabi.experiments.scenarios import run_scenario, time_to_target
from sta_rabi.experiments.sweep import grid_points, sweep
from sta_rabi.experiments.table import (REQUIRED_METADATA, ResultTable, csv_text, emit, format_float,
                                        read_csv, resolve_output_dir)


def _write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- configuration -------------------------------------------------------------

@pytest.mark.parametrize("text, location", [
    ("scenario: Fig3a_Pulses\nschedule: {r_max: -1}\n", "schedule.r_max"),
    ("scenario: Fig3a_Pulses\nschedule: {bogus: 1}\n", "schedule.bogus"),
    ("scenario: Fig3a_Pulses\nhilbert: {fock_dim: 2.5}\n", "hilbert.fock_dim"),
    ("scenario: Nope\n", "scenario"),
    ("scenario: Fig3a_Pulses\nsolver: {tol: 1.0e-3}\n", "solver.tol"),
    ("scenario: Fig3a_Pulses\nsweep:\n  - {name: model.nope, min: 0, max: 1, count: 3}\n", "sweep[0].name"),
    ("scenario: Fig3a_Pulses\nsweep:\n  - {name: model.lam, min: 0, max: 1, count: 1}\n", "sweep[0].count"),
    ("scenario: Fig3a_Pulses\nextra: 1\n", "extra"),
])
def test_config_errors_name_the_offending_key(tmp_path, text, location):
    path = _write(tmp_path, text)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.location == f"{path}:{location}"
    assert str(path) in str(info.value)


def test_yaml_syntax_error_has_line_and_column(tmp_path):
    path = _write(tmp_path, "scenario: Fig3a_Pulses\nschedule: {r_max: [1\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.location.startswith(f"{path}:3:")


def test_defaults_and_overrides():
    cfg = parse_config({"scenario": "Fig2a_AdiabaticTvsEN"})
    assert cfg["schedule.r_max"] == 1.8 and cfg["schedule.T"] == 250
    cfg2 = cfg.replace(**{"hilbert.fock_dim": 80})
    assert cfg2["hilbert.fock_dim"] == 80 and cfg["hilbert.fock_dim"] != 80
    assert cfg.config_hash() != cfg2.config_hash()
    assert cfg.config_hash() == cfg.with_output("elsewhere").config_hash()
    with pytest.raises(ConfigError):
        cfg.replace(**{"model.lam": -1.0})


def test_every_shipped_config_validates():
    from pathlib import Path

    configs = sorted(Path(__file__).resolve().parents[1].joinpath("configs").glob("*.yaml"))
    assert configs
    for path in configs:
        load_config(path)


def test_grid_points_row_major():
    cfg = parse_config({"scenario": "Fig3a_Pulses", "sweep": [
        {"name": "schedule.r_max", "min": 1, "max": 2, "count": 2},
        {"name": "schedule.T", "min": 10, "max": 30, "count": 3}]})
    pts = grid_points(cfg)
    assert [(p["schedule.r_max"], p["schedule.T"]) for p in pts] == [
        (1, 10), (1, 20), (1, 30), (2, 10), (2, 20), (2, 30)]


# -- tables ----------------------------------------------------------------------

def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    values = np.concatenate([rng.normal(size=50) * 10.0 ** rng.integers(-300, 300, 50),
                             [0.0, -0.0, 1 / 3, np.nextafter(1, 2), 5e-324, np.nan]])
    table = ResultTable({"x": values, "status": ["ok"] * len(values)}, {"scenario": "t"})
    emit(table, tmp_path, "rt")
    back = read_csv(tmp_path / "rt.csv")
    assert back.names == ["x", "status"]
    got = back["x"]
    assert np.array_equal(got.view(np.uint64)[:-1], values.view(np.uint64)[:-1])
    assert math.isnan(got[-1])
    assert back["status"] == ["ok"] * len(values)
    # writing the parsed table again reproduces the same bytes
    assert csv_text(back).encode() == (tmp_path / "rt.csv").read_bytes()


def test_empty_table_writes_header_only(tmp_path):
    table = ResultTable({"a": [], "b": []}, {})
    paths = emit(table, tmp_path, "empty")
    assert paths["csv"].read_bytes() == b"a,b\r\n"
    assert read_csv(paths["csv"]).n_rows == 0
    assert json.loads(paths["json"].read_text())["columns"] == {"a": [], "b": []}


def test_json_nan_is_null(tmp_path):
    paths = emit(ResultTable({"a": [1.0, np.nan]}, {"v": np.float64(np.nan)}), tmp_path, "n")
    data = json.loads(paths["json"].read_text())
    assert data["columns"]["a"] == [1.0, None] and data["metadata"]["v"] is None


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(0.1)) == 0.1
    assert format_float(float("nan")) == "nan"


def test_ragged_table_rejected():
    with pytest.raises(ValueError):
        ResultTable({"a": [1, 2], "b": [1]})


def test_output_dir_precedence(monkeypatch, tmp_path):
    monkeypatch.delenv("STA_RABI_OUT", raising=False)
    assert resolve_output_dir("cfg") == resolve_output_dir("cfg", None)
    assert str(resolve_output_dir("cfg")) == "cfg"
    monkeypatch.setenv("STA_RABI_OUT", str(tmp_path / "env"))
    assert resolve_output_dir("cfg") == tmp_path / "env"
    assert str(resolve_output_dir("cfg", "flag")) == "flag"


# -- scenarios -------------------------------------------------------------------

def test_time_to_target_bisection():
    # E_N(T) = T / 10 reaches 0.95 at T = 9.5
    T, en, f, status = time_to_target(lambda T: (min(T / 10, 1.0), 1.0), 0.95, 0.5, 1, 20, 2, 0.01)
    assert status == "ok" and 9.5 <= T <= 9.52
    T, *_, status = time_to_target(lambda T: (0.1, 1.0), 0.95, 0.5, 1, 20, 2, 0.01)
    assert status == "not_reached" and math.isnan(T)
    T, *_, status = time_to_target(lambda T: (1.0, 1.0), 0.95, 0.5, 1, 20, 2, 0.01)
    assert status == "at_lower_bound" and T == 1


def test_pulse_scenario_table_and_metadata():
    cfg = parse_config({"scenario": "Fig3a_Pulses", "solver": {"n_samples": 11}})
    table = run_scenario(cfg)
    assert table.names == ["t", "r", "omega_r", "omega_i"]
    assert table.n_rows == 11
    assert not table.missing_metadata()
    assert set(REQUIRED_METADATA) <= set(table.metadata)
    assert np.allclose(table["omega_r"], np.tanh(2 * table["r"]))


# -- command line ----------------------------------------------------------------

def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("STA_RABI_OUT", raising=False)
    bad = _write(tmp_path, "scenario: Fig3a_Pulses\nschedule: {T: -3}\n", "bad.yaml")
    assert cli.main(["validate", str(bad)]) == cli.EXIT_CONFIG
    assert "schedule.T" in capsys.readouterr().err
    good = _write(tmp_path, f"scenario: Fig3a_Pulses\noutput_dir: {tmp_path / 'cfgout'}\n", "good.yaml")
    assert cli.main(["validate", str(good)]) == cli.EXIT_OK
    assert cli.main(["run", str(good), "--out", str(tmp_path / "flag")]) == cli.EXIT_OK
    assert (tmp_path / "flag" / "Fig3a_Pulses.csv").exists()
    assert (tmp_path / "flag" / "metadata.json").exists()
    # a run that cannot fit its Fock space is a numerical failure
    tiny = _write(tmp_path, "scenario: Fig3b_Contour\nhilbert: {fock_dim: 4}\nschedule: {r_max: 3.0}\n"
                            "solver: {convergence_check: false}\n", "tiny.yaml")
    monkeypatch.setattr("sta_rabi.experiments.scenarios.auto_dim", lambda cfg, d, eta: d)
    assert cli.main(["run", str(tiny), "--out", str(tmp_path / "x")]) == cli.EXIT_NUMERIC
    assert cli.main(["list-scenarios"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert all(s.value in out for s in Scenario)


def test_cli_env_output_dir(tmp_path, monkeypatch):
    good = _write(tmp_path, f"scenario: Fig3a_Pulses\noutput_dir: {tmp_path / 'cfgout'}\n")
    monkeypatch.setenv("STA_RABI_OUT", str(tmp_path / "env"))
    assert cli.main(["run", str(good)]) == cli.EXIT_OK
    assert (tmp_path / "env" / "Fig3a_Pulses.csv").exists()
    assert not (tmp_path / "cfgout").exists()


def test_cli_global_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv("STA_RABI_OUT", raising=False)
    good = _write(tmp_path, "scenario: Fig3a_Pulses\n")
    assert cli.main(["run", str(good), "--fock-dim", "12", "--tol", "1e-9", "--out", str(tmp_path / "o")]) == 0
    meta = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert meta["fock_dim"] == 12 and meta["params"]["solver.tol"] == 1e-9


def test_console_script_module_entry(tmp_path):
    good = _write(tmp_path, "scenario: Fig3a_Pulses\n")
    proc = subprocess.run([sys.executable, "-m", "sta_rabi.experiments.cli", "validate", str(good)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "ok" in proc.stdout


# -- sweeps ----------------------------------------------------------------------

SWEEP_YAML = """scenario: Fig3b_Contour
hilbert: {fock_dim: 30}
solver: {tol: 1.0e-8}
schedule: {T: 20}
sweep:
  - {name: model.lam, min: 0.02, max: 0.045, count: 2}
  - {name: schedule.r_max, min: 1.0, max: 1.5, count: 2}
"""


def test_sweep_is_byte_identical_across_worker_counts(tmp_path, monkeypatch):
    monkeypatch.delenv("STA_RABI_OUT", raising=False)
    cfg = load_config(_write(tmp_path, SWEEP_YAML))
    one = sweep(cfg, max_workers=1)
    three = sweep(cfg, max_workers=3)
    emit(one, tmp_path / "w1", "s")
    emit(three, tmp_path / "w3", "s")
    for name in ("s.csv", "s.json", "metadata.json"):
        assert (tmp_path / "w1" / name).read_bytes() == (tmp_path / "w3" / name).read_bytes()
    assert list(one["grid_index"]) == [0, 1, 2, 3]
    assert one.metadata["failures"] == []


def test_sweep_reports_failed_points(monkeypatch):
    monkeypatch.delenv("STA_RABI_OUT", raising=False)
    # lam >= delta is rejected by the schedule, so the second point fails
    cfg = parse_config({"scenario": "Fig3b_Contour", "hilbert": {"fock_dim": 30},
                        "sweep": [{"name": "model.lam", "min": 0.045, "max": 1.5, "count": 2}]}, "inline")
    table = sweep(cfg, 1)
    assert [f["grid_index"] for f in table.metadata["failures"]] == [1]
    assert table["status"][0] in ("ok", "NON-CONVERGED")
    assert table["status"][1].startswith("failed:")
    assert math.isnan(table["infidelity"][1])
