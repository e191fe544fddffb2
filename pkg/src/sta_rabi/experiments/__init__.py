"""Scenario configs, runners, parameter sweeps and result files."""
from .config import Scenario, ScenarioConfig, SweepAxis, load_config, parse_config
from .scenarios import run_scenario, time_to_target
from .sweep import grid_points, sweep
from .table import ResultTable, emit, read_csv

__all__ = [
    "Scenario",
    "ScenarioConfig",
    "SweepAxis",
    "load_config",
    "parse_config",
    "run_scenario",
    "time_to_target",
    "grid_points",
    "sweep",
    "ResultTable",
    "emit",
    "read_csv",
]
