"""Grid sweeps over scenario parameters on a bounded process pool."""
from __future__ import annotations

import itertools
import logging
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import __version__
from ..exceptions import StaRabiError
from .config import ScenarioConfig
from .scenarios import run_scenario
from .table import ResultTable

__all__ = ["grid_points", "sweep", "assemble"]

log = logging.getLogger(__name__)

# each integration is single threaded; pin BLAS so results cannot depend on
# how many threads a worker happens to get
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def grid_points(cfg: ScenarioConfig) -> list:
    """Row-major list of ``{name: value}`` dicts over the sweep axes."""
    if not cfg.sweep:
        return [{}]
    names = [a.name for a in cfg.sweep]
    values = [a.values() for a in cfg.sweep]
    return [dict(zip(names, (float(v) for v in combo))) for combo in itertools.product(*values)]


def _run_point(args):
    cfg, point = args
    try:
        table = run_scenario(cfg.replace(**point) if point else cfg)
        return "ok", table.columns, table.metadata
    except (StaRabiError, ValueError, ArithmeticError) as exc:
        return "failed", f"{type(exc).__name__}: {exc}", None


def sweep(cfg: ScenarioConfig, max_workers: int = 1) -> ResultTable:
    """Evaluate every grid point and stack the per-point tables.

    Rows are ordered by grid index whatever the worker count. A failed point
    contributes one row of NaNs whose ``status`` column carries the cause;
    the failures are also listed in ``metadata["failures"]``.
    """
    if int(max_workers) != max_workers or max_workers < 1:
        raise ValueError("max_workers must be an integer >= 1")
    points = grid_points(cfg)
    base = ScenarioConfig(cfg.scenario, cfg.params, (), cfg.output_dir, cfg.source)
    jobs = [(base, p) for p in points]
    saved = {k: os.environ.get(k) for k in _THREAD_VARS}
    os.environ.update({k: "1" for k in _THREAD_VARS})
    try:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=int(max_workers), mp_context=ctx) as pool:
            results = list(pool.map(_run_point, jobs))
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v
    return assemble(cfg, points, results)


def assemble(cfg, points, results) -> ResultTable:
    axis_names = [a.name for a in cfg.sweep]
    template = next((cols for status, cols, _ in results if status == "ok"), None)
    value_names = [] if template is None else list(template)
    cols = {"grid_index": []}
    cols.update({n: [] for n in axis_names})
    cols.update({n: [] for n in value_names})
    cols["status"] = []
    failures, per_point = [], []
    non_converged = False
    for idx, (point, (status, payload, meta)) in enumerate(zip(points, results)):
        if status == "ok":
            n_rows = len(next(iter(payload.values()))) if payload else 0
            for name in value_names:
                cols[name].extend(list(payload[name]))
            conv = meta["convergence"]
            non_converged |= not conv["converged"]
            per_point.append({"grid_index": idx, "point": point, "convergence": conv,
                              "results": meta.get("results", {})})
            text = "ok" if conv["converged"] else "NON-CONVERGED"
        else:
            n_rows = 1
            for name in value_names:
                sample = template[name]
                cols[name].append("" if isinstance(sample, list) else math.nan)
            failures.append({"grid_index": idx, "point": point, "cause": payload})
            text = f"failed: {payload}"
        cols["grid_index"].extend([idx] * n_rows)
        for name in axis_names:
            cols[name].extend([point[name]] * n_rows)
        cols["status"].extend([text] * n_rows)
    if not cols["status"]:
        cols = {name: np.zeros(0) for name in cols}
    first_meta = next((m for status, _, m in results if status == "ok"), {})
    meta = {
        "scenario": cfg.scenario.value,
        "config_hash": cfg.config_hash(),
        "code_version": __version__,
        "fock_dim": cfg["hilbert.fock_dim"],
        "tolerances": first_meta.get("tolerances", {"solver_tol": cfg["solver.tol"],
                                                      "bisection_tol": cfg["solver.bisection_tol"]}),
        "convergence": {"converged": not non_converged, "points": per_point},
        "flags": ["NON-CONVERGED"] if non_converged else [],
        "sweep_axes": [{"name": a.name, "min": a.min, "max": a.max, "count": a.count} for a in cfg.sweep],
        "failures": failures,
        "params": dict(sorted(cfg.params.items())),
    }
    return ResultTable(cols, meta)
