"""Scenario configuration: YAML loading, defaults and validation.

A config file looks like::

    scenario: Fig4b_Dissipation
    output_dir: results
    model:    {lam: 0.045}
    schedule: {r_max: 2.3, T: 20}
    bath:     {inv_sqrt_c: 0.05}
    hilbert:  {fock_dim: 40}
    solver:   {tol: 1.0e-8}
    scenario_params: {adiabatic_T: 250}
    sweep:
      - {name: bath.inv_sqrt_c, min: 0.0, max: 0.05, count: 6}

Every parameter is addressed by a dotted ``section.key`` name; sweep axes
must use one of those names.
"""
from __future__ import annotations

import copy
import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..exceptions import ConfigError

__all__ = [
    "Scenario",
    "SweepAxis",
    "ScenarioConfig",
    "DEFAULTS",
    "SCENARIO_DEFAULTS",
    "load_config",
    "parse_config",
]


class Scenario(str, enum.Enum):
    FIG2A = "Fig2a_AdiabaticTvsEN"
    FIG2B = "Fig2b_StaTvsEN"
    FIG3A = "Fig3a_Pulses"
    FIG3B = "Fig3b_Contour"
    FIG4A = "Fig4a_Robustness"
    FIG4B = "Fig4b_Dissipation"
    FIGS1 = "FigS1_Turnoff"
    FIGS2 = "FigS2_StaNoise"
    FIGS3 = "FigS3_AdiabaticNoise"
    ALT = "AltDrivenCD"


# (type, default) per section
DEFAULTS = {
    "model": {
        "delta": (float, 1.0),
        "lam": (float, 0.045),
        "omega_c": (float, 1.0),
        "omega_q": (float, 0.0),
        "big_omega": (float, 0.0),
    },
    "schedule": {
        "r_max": (float, 2.3),
        "f0": (float, 10.0),
        "T": (float, 20.0),
        "eta0_re": (float, 0.01),
        "eta0_im": (float, 0.01),
        "T_off": (float, 5.0),
        "orientation": (str, "decreasing"),
    },
    "bath": {
        "inv_sqrt_c": (float, 0.0),
        "compensated": (bool, True),
        "phi_e": (float, float(np.pi)),
    },
    "hilbert": {
        "fock_dim": (int, 40),
        "frame": (str, "squeezed"),
    },
    "solver": {
        "tol": (float, 1e-8),
        "n_samples": (int, 400),
        "bisection_tol": (float, 0.5),
        "convergence_check": (bool, True),
    },
    "scenario_params": {
        # Fig2a/Fig2b
        "en_targets": (list, [0.99, 0.999, 0.9999]),
        "fidelity_floor": (float, 0.99),
        "T_min": (float, 5.0),
        "T_max": (float, 60.0),
        "T_step": (float, 5.0),
        # Fig4a
        "delta_T": (list, [-0.2, -0.1, 0.0, 0.1, 0.2]),
        # Fig4b / FigS2(c) / FigS3(c)
        "inv_sqrt_c_values": (list, [0.0, 0.025, 0.05]),
        "adiabatic_r_max": (float, 1.8),
        "adiabatic_T": (float, 250.0),
        "panel": (str, "noise"),
        # AltDrivenCD
        "omega_ratio": (float, 50.0),
        "eta_f": (float, 1.5),
    },
}

SCENARIO_DEFAULTS = {
    Scenario.FIG2A: {"schedule.r_max": 1.8, "schedule.T": 250.0, "hilbert.fock_dim": 50,
                     "scenario_params.T_min": 50.0, "scenario_params.T_max": 450.0,
                     "scenario_params.T_step": 50.0, "solver.tol": 1e-9},
    Scenario.FIG2B: {"solver.tol": 1e-10, "scenario_params.T_max": 40.0, "scenario_params.T_step": 1.0},
    Scenario.FIG3A: {"schedule.r_max": 2.0},
    Scenario.FIG3B: {"solver.tol": 1e-10},
    Scenario.FIG4A: {"hilbert.fock_dim": 60, "solver.tol": 1e-10},
    Scenario.FIG4B: {"bath.inv_sqrt_c": 0.05, "hilbert.fock_dim": 70},
    Scenario.FIGS1: {"schedule.r_max": 1.8, "schedule.T": 250.0, "hilbert.fock_dim": 600, "solver.tol": 1e-9},
    Scenario.FIGS2: {},
    Scenario.FIGS3: {"schedule.r_max": 1.8, "schedule.T": 250.0, "hilbert.fock_dim": 70},
    Scenario.ALT: {"hilbert.fock_dim": 40, "solver.tol": 1e-10},
}

_TOP_KEYS = {"scenario", "output_dir", "sweep", *DEFAULTS}


@dataclass(frozen=True)
class SweepAxis:
    name: str
    min: float
    max: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario definition.

    ``params`` is a flat mapping ``"section.key" -> value`` with every
    parameter filled in (scenario defaults applied).
    """

    scenario: Scenario
    params: dict
    sweep: tuple = ()
    output_dir: str = "results"
    source: str = field(default="<dict>", compare=False)

    def __getitem__(self, name):
        return self.params[name]

    def replace(self, **overrides) -> "ScenarioConfig":
        """Copy with dotted-name parameter overrides (validated)."""
        params = copy.deepcopy(self.params)
        for name, value in overrides.items():
            params[name] = _coerce(name, value, f"{self.source}:{name}")
        _check_ranges(params, self.source)
        return ScenarioConfig(self.scenario, params, self.sweep, self.output_dir, self.source)

    def with_output(self, output_dir) -> "ScenarioConfig":
        return ScenarioConfig(self.scenario, self.params, self.sweep, str(output_dir), self.source)

    def to_dict(self) -> dict:
        nested: dict = {"scenario": self.scenario.value, "output_dir": self.output_dir}
        for name, value in sorted(self.params.items()):
            section, key = name.split(".", 1)
            nested.setdefault(section, {})[key] = value
        nested["sweep"] = [
            {"name": a.name, "min": a.min, "max": a.max, "count": a.count} for a in self.sweep
        ]
        return nested

    def config_hash(self) -> str:
        """SHA-256 of the physics content (output location excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _spec(name):
    section, _, key = name.partition(".")
    try:
        return DEFAULTS[section][key]
    except KeyError:
        return None


def _coerce(name, value, where):
    spec = _spec(name)
    if spec is None:
        raise ConfigError(f"unknown parameter '{name}'", location=where)
    kind = spec[0]
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is int:
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not np.isfinite(out):
                raise ValueError
            return out
        if kind is list:
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return [float(v) for v in value]
        if not isinstance(value, str):
            raise TypeError
        return value
    except (TypeError, ValueError):
        raise ConfigError(
            f"'{name}' expects {kind.__name__}, got {value!r}", location=where
        ) from None


def _check_ranges(params, where):
    def bad(name, msg):
        raise ConfigError(f"'{name}' {msg}", location=f"{where}:{name}")

    positive = ["model.delta", "schedule.T", "schedule.T_off", "solver.bisection_tol",
                "scenario_params.T_step", "scenario_params.adiabatic_T",
                "scenario_params.omega_ratio", "scenario_params.eta_f"]
    for name in positive:
        if not params[name] > 0:
            bad(name, "must be positive")
    for name in ["schedule.r_max", "bath.inv_sqrt_c", "model.lam", "scenario_params.adiabatic_r_max"]:
        if params[name] < 0:
            bad(name, "must be non-negative")
    if params["hilbert.fock_dim"] < 2:
        bad("hilbert.fock_dim", "must be at least 2")
    if params["solver.n_samples"] < 2:
        bad("solver.n_samples", "must be at least 2")
    if not 1e-12 <= params["solver.tol"] <= 1e-6:
        bad("solver.tol", "must lie in [1e-12, 1e-6]")
    if params["hilbert.frame"] not in ("lab", "squeezed"):
        bad("hilbert.frame", "must be 'lab' or 'squeezed'")
    if params["schedule.orientation"] not in ("decreasing", "as_printed"):
        bad("schedule.orientation", "must be 'decreasing' or 'as_printed'")
    if params["scenario_params.panel"] not in ("noise", "fidelity"):
        bad("scenario_params.panel", "must be 'noise' or 'fidelity'")
    if params["scenario_params.T_min"] >= params["scenario_params.T_max"]:
        bad("scenario_params.T_min", "must be below scenario_params.T_max")
    if not 0 < params["scenario_params.fidelity_floor"] <= 1:
        bad("scenario_params.fidelity_floor", "must lie in (0, 1]")
    for t in params["scenario_params.en_targets"]:
        if not 0 < t < 1:
            bad("scenario_params.en_targets", "entries must lie in (0, 1)")
    for v in params["scenario_params.delta_T"]:
        if not v > -1:
            bad("scenario_params.delta_T", "entries must exceed -1")
    for v in params["scenario_params.inv_sqrt_c_values"]:
        if v < 0:
            bad("scenario_params.inv_sqrt_c_values", "entries must be non-negative")


def _parse_sweep(raw, where):
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigError("'sweep' must be a list of axes", location=f"{where}:sweep")
    axes = []
    seen = set()
    for i, ax in enumerate(raw):
        loc = f"{where}:sweep[{i}]"
        if not isinstance(ax, dict):
            raise ConfigError("sweep axis must be a mapping", location=loc)
        extra = set(ax) - {"name", "min", "max", "count"}
        missing = {"name", "min", "max", "count"} - set(ax)
        if extra:
            raise ConfigError(f"unknown sweep key(s) {sorted(extra)}", location=loc)
        if missing:
            raise ConfigError(f"missing sweep key(s) {sorted(missing)}", location=loc)
        name = ax["name"]
        spec = _spec(str(name))
        if spec is None:
            raise ConfigError(f"sweep axis references unknown parameter '{name}'", location=f"{loc}.name")
        if spec[0] not in (float, int):
            raise ConfigError(f"parameter '{name}' is not numeric and cannot be swept", location=f"{loc}.name")
        if name in seen:
            raise ConfigError(f"duplicate sweep axis '{name}'", location=f"{loc}.name")
        seen.add(name)
        count = ax["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 2:
            raise ConfigError(f"count must be an integer >= 2, got {count!r}", location=f"{loc}.count")
        try:
            lo, hi = float(ax["min"]), float(ax["max"])
        except (TypeError, ValueError):
            raise ConfigError("min and max must be numbers", location=loc) from None
        if not lo <= hi:
            raise ConfigError(f"min {lo} exceeds max {hi}", location=loc)
        axes.append(SweepAxis(str(name), lo, hi, count))
    return tuple(axes)


def parse_config(raw, source: str = "<dict>") -> ScenarioConfig:
    """Validate a nested mapping (as loaded from YAML) into a :class:`ScenarioConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level", location=source)
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level key(s) {sorted(extra)}", location=f"{source}:{sorted(extra)[0]}")
    if "scenario" not in raw:
        raise ConfigError("missing required key 'scenario'", location=source)
    try:
        scenario = Scenario(raw["scenario"])
    except ValueError:
        choices = ", ".join(s.value for s in Scenario)
        raise ConfigError(f"unknown scenario {raw['scenario']!r}; choose one of {choices}",
                          location=f"{source}:scenario") from None

    params = {f"{sec}.{k}": copy.deepcopy(v[1]) for sec, keys in DEFAULTS.items() for k, v in keys.items()}
    params.update(SCENARIO_DEFAULTS[scenario])
    for section in DEFAULTS:
        block = raw.get(section)
        if block is None:
            continue
        if not isinstance(block, dict):
            raise ConfigError(f"section '{section}' must be a mapping", location=f"{source}:{section}")
        for key, value in block.items():
            name = f"{section}.{key}"
            params[name] = _coerce(name, value, f"{source}:{name}")
    _check_ranges(params, source)
    output_dir = raw.get("output_dir", "results")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir must be a non-empty string", location=f"{source}:output_dir")
    sweep = _parse_sweep(raw.get("sweep"), source)
    return ScenarioConfig(scenario, params, sweep, output_dir, source)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", location=str(path)) from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", location=loc) from None
    return parse_config(raw, str(path))
