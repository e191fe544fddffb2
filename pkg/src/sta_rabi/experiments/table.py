"""Result tables and their on-disk formats."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ResultTable", "emit", "read_csv", "format_float", "resolve_output_dir"]

REQUIRED_METADATA = ("scenario", "config_hash", "code_version", "fock_dim", "tolerances", "convergence")


def format_float(x: float) -> str:
    """17 significant digits, enough for an exact round trip of a double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


@dataclass
class ResultTable:
    """Named equal-length columns plus a metadata mapping.

    Numeric columns are float arrays; text columns (status messages) are
    lists of strings.
    """

    columns: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = {}
        for name, values in self.columns.items():
            if isinstance(values, (list, tuple)) and values and isinstance(values[0], str):
                cols[name] = [str(v) for v in values]
            else:
                cols[name] = np.asarray(values, dtype=float).reshape(-1)
        lengths = {len(v) for v in cols.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
        self.columns = cols

    @property
    def names(self) -> list:
        return list(self.columns)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name):
        return self.columns[name]

    def missing_metadata(self) -> list:
        return [k for k in REQUIRED_METADATA if k not in self.metadata]

    def rows(self):
        for i in range(self.n_rows):
            yield [self.columns[n][i] for n in self.names]


def _cell(v):
    return v if isinstance(v, str) else format_float(v)


def _json_value(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return v if math.isfinite(v) else None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _json_value(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def csv_text(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(table.names)
    for row in table.rows():
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def json_text(table: ResultTable) -> str:
    payload = {
        "columns": {n: [_json_value(v) for v in table.columns[n]] for n in table.names},
        "metadata": _jsonable(table.metadata),
    }
    return json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"


_PLOT_TEMPLATE = '''#!/usr/bin/env python3
# Plot {name}.csv: first column on x, every other numeric column on y.
import csv
import math
import os
import sys

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{name}.csv"), newline="") as fh:
    rows = list(csv.reader(fh))
header, body = rows[0], rows[1:]


def num(s):
    try:
        return float(s)
    except ValueError:
        return math.nan


cols = list(zip(*body)) if body else [[] for _ in header]
x = [num(v) for v in cols[0]] if body else []
fig, ax = plt.subplots()
for name, col in zip(header[1:], cols[1:]):
    y = [num(v) for v in col]
    if any(not math.isnan(v) for v in y):
        ax.plot(x, y, marker=".", label=name)
ax.set_xlabel(header[0])
ax.set_title("{name}")
ax.legend(fontsize="small")
fig.savefig(os.path.join(here, "{name}.png"), dpi=150)
if "--show" in sys.argv:
    plt.show()
'''


def plot_script(name: str) -> str:
    return _PLOT_TEMPLATE.format(name=name)


def resolve_output_dir(configured, cli_override=None) -> Path:
    """``--out`` beats ``STA_RABI_OUT``, which beats the config's ``output_dir``."""
    if cli_override:
        return Path(cli_override)
    env = os.environ.get("STA_RABI_OUT")
    if env:
        return Path(env)
    return Path(configured)


def _write(path: Path, text: str):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def emit(table: ResultTable, output_dir, name: str, formats=("CSV", "JSON")) -> dict:
    """Write ``<name>.csv``, ``<name>.json``, ``<name>.plot`` and ``metadata.json``.

    Returns the mapping ``kind -> path`` of everything written.
    """
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create output directory {out}: {exc.strerror}") from None
    formats = {f.upper() for f in formats}
    unknown = formats - {"CSV", "JSON"}
    if unknown:
        raise ValueError(f"unknown format(s) {sorted(unknown)}")
    written = {}
    if "CSV" in formats:
        written["csv"] = out / f"{name}.csv"
        _write(written["csv"], csv_text(table))
        written["plot"] = out / f"{name}.plot"
        _write(written["plot"], plot_script(name))
    if "JSON" in formats:
        written["json"] = out / f"{name}.json"
        _write(written["json"], json_text(table))
    written["metadata"] = out / "metadata.json"
    _write(written["metadata"], json.dumps(_jsonable(table.metadata), indent=2, allow_nan=False) + "\n")
    return written


def read_csv(path) -> ResultTable:
    """Parse a table written by :func:`emit` (metadata is not recovered)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in body]
        try:
            cols[name] = np.array([float(v) for v in raw], dtype=float)
        except ValueError:
            cols[name] = raw
    if not body:
        cols = {name: np.zeros(0) for name in header}
    return ResultTable(cols)
