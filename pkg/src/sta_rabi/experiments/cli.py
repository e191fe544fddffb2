"""Command-line entry point: ``sta-rabi {run,sweep,validate,list-scenarios}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (including
any failed sweep point). A NON-CONVERGED flag is reported but is not an error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..exceptions import ConfigError, StaRabiError
from .config import Scenario, load_config
from .scenarios import SCENARIO_INFO, run_scenario
from .sweep import sweep
from .table import emit, resolve_output_dir

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("sta_rabi")


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--fock-dim", type=int, default=argparse.SUPPRESS, help="override hilbert.fock_dim")
    g.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="override solver.tol")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory (beats STA_RABI_OUT)")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return g


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(prog="sta-rabi", parents=[flags], description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[flags], help="run one scenario")
    p.add_argument("config")
    p = sub.add_parser("sweep", parents=[flags], help="run a scenario over its sweep grid")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("validate", parents=[flags], help="check a config file and exit")
    p.add_argument("config")
    sub.add_parser("list-scenarios", parents=[flags], help="print the scenario names")
    return parser


def _load(args):
    cfg = load_config(args.config)
    overrides = {}
    if getattr(args, "fock_dim", None) is not None:
        overrides["hilbert.fock_dim"] = args.fock_dim
    if getattr(args, "tol", None) is not None:
        overrides["solver.tol"] = args.tol
    if overrides:
        cfg = cfg.replace(**overrides)
    return cfg


def _write(table, cfg, args):
    out = resolve_output_dir(cfg.output_dir, getattr(args, "out", None))
    paths = emit(table, out, cfg.scenario.value)
    for kind in ("csv", "json", "plot", "metadata"):
        print(f"wrote {paths[kind]}")
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list-scenarios":
            for s in Scenario:
                print(f"{s.value:24s} {SCENARIO_INFO[s][2]}")
            return EXIT_OK
        cfg = _load(args)
        if args.command == "validate":
            print(f"{args.config}: ok ({cfg.scenario.value}, {len(cfg.sweep)} sweep axes)")
            return EXIT_OK
        if args.command == "run":
            table = run_scenario(cfg)
        else:
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1", location="--workers")
            table = sweep(cfg, args.workers)
        _write(table, cfg, args)
        failures = table.metadata.get("failures", [])
        for f in failures:
            print(f"grid point {f['grid_index']} {f['point']} failed: {f['cause']}", file=sys.stderr)
        if "NON-CONVERGED" in table.metadata.get("flags", []):
            print("warning: result flagged NON-CONVERGED (fock_dim doubling drift above limit)", file=sys.stderr)
        return EXIT_NUMERIC if failures else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StaRabiError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
