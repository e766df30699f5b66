"""Readers for the versioned swarmsafe CSV/JSON output contracts.

Only the documented file formats are consumed: `run_record.csv`,
`ensemble_mean.csv` / `ensemble_std.csv`, `snapshots.csv` (all prefixed
with the `# swarmsafe-csv schema=1` header line) and `manifest.json`.
Input files are opened read-only and never modified.
"""

import csv
import json
import re
from pathlib import Path

import numpy as np

SCHEMA_PREFIX = "# swarmsafe-csv"


class FormatError(ValueError):
    """Raised when an input file does not follow the published contract."""


def _open_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith(SCHEMA_PREFIX):
            raise FormatError(f"{path}: missing '{SCHEMA_PREFIX}' header line")
        return list(csv.DictReader(fh))


def read_table(path):
    """Read a metrics table into a dict of float arrays (blank -> NaN)."""
    rows = _open_table(path)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    cols = {k: [] for k in rows[0]}
    for row in rows:
        for k, v in row.items():
            cols[k].append(float(v) if v not in ("", None) else np.nan)
    return {k: np.asarray(v) for k, v in cols.items()}


def read_snapshots(path):
    """Read snapshot rows grouped as {time: {population: (n, 2) array}}."""
    rows = _open_table(path)
    grouped = {}
    for row in rows:
        t = float(row["t"])
        pop = row["population"]
        grouped.setdefault(t, {}).setdefault(pop, []).append(
            (float(row["x1"]), float(row["x2"]))
        )
    return {
        t: {pop: np.asarray(pts) for pop, pts in pops.items()}
        for t, pops in grouped.items()
    }


def read_manifest(run_dir):
    path = Path(run_dir) / "manifest.json"
    with open(path, encoding="utf-8") as fh:
        man = json.load(fh)
    config = man.get("config", "")
    kind = "coverage"
    m = re.search(r'^kind\s*=\s*"(\w+)"', config, re.MULTILINE)
    if m:
        kind = m.group(1)
    goal_radius = None
    m = re.search(r"^goal_radius\s*=\s*([0-9.eE+-]+)", config, re.MULTILINE)
    if m:
        goal_radius = float(m.group(1))
    obstacles = man.get("obstacles", {})
    return {
        "kind": kind,
        "goal_radius": goal_radius,
        "centers": np.asarray(obstacles.get("centers", []), dtype=float).reshape(-1, 2),
        "radius": float(obstacles.get("radius", 0.0)),
        "filter": man.get("filter"),
    }


def locate_metrics(in_dir):
    """Find the metrics table (and optional std) for a run or ensemble dir."""
    in_dir = Path(in_dir)
    mean = in_dir / "ensemble_mean.csv"
    if mean.exists():
        std = in_dir / "ensemble_std.csv"
        return mean, (std if std.exists() else None)
    record = in_dir / "run_record.csv"
    if record.exists():
        return record, None
    raise FormatError(f"{in_dir}: no ensemble_mean.csv or run_record.csv found")


def locate_run_dir(in_dir):
    """Find a directory holding snapshots.csv + manifest.json."""
    in_dir = Path(in_dir)
    if (in_dir / "snapshots.csv").exists():
        return in_dir
    members = sorted(in_dir.glob("run_*"))
    for member in members:
        if (member / "snapshots.csv").exists():
            return member
    raise FormatError(f"{in_dir}: no snapshots.csv found")
