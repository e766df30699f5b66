"""Command-line experiment orchestration.

Subcommands:
  run       one seeded simulation -> run_record.csv, snapshots.csv, manifest
  ensemble  independent seeded runs -> per-run files + ensemble mean/std CSVs
  certify   minimum-overlap certificate for a mass level on a fixed layout
  diagnose  bounded-stability constants from a recorded run's snapshots

Every CSV starts with a `# swarmsafe-csv schema=1` header line; manifests
and stability reports are JSON.  The output directory resolves in order:
`--out` flag, `SWARMSAFE_OUT` environment variable, config `output_dir`.
All outputs are deterministic functions of (config, flags, seed); ensemble
member seeds are `base_seed + index`, so worker counts never change results.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import (
    control_field,
    grid_eval,
    stability_constants,
    uniform_density,
)
from .config import dump_config, load_config, load_preset
from .errors import (
    CertificateUnavailableError,
    InvalidInputError,
    PlacementInfeasibleError,
    SetupError,
)
from .obstacles import ObstacleSet, _grid_infima, build_potential, min_overlap_bound
from .scenarios import place_obstacles, von_mises_density
from .sim import METRIC_COLUMNS, run_simulation
from .torus import GaussKernelSpec

CSV_SCHEMA_LINE = "# swarmsafe-csv schema=1"
SNAPSHOT_COLUMNS = ("t", "population", "index", "x1", "x2", "u1", "u2")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SETUP = 2
EXIT_NO_CERTIFICATE = 3
EXIT_NO_DIAGNOSTIC = 4
EXIT_PARTIAL = 5


def _fmt(x):
    if isinstance(x, float):  # also accepts numpy floats
        return "" if np.isnan(x) else repr(float(x))
    return str(x)


def _load(config_arg):
    path = Path(config_arg)
    if path.exists():
        return load_config(path)
    return load_preset(str(config_arg))


def _resolve_out(cfg, args):
    if getattr(args, "out", None):
        return Path(args.out)
    env = os.environ.get("SWARMSAFE_OUT")
    if env:
        return Path(env)
    return Path(cfg.output_dir)


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, base_seed=args.seed, sim=replace(cfg.sim, seed=args.seed))
    else:
        cfg = replace(cfg, sim=replace(cfg.sim, seed=cfg.base_seed))
    if getattr(args, "no_filter", False):
        cfg = replace(cfg, filter_enabled=False)
    if getattr(args, "runs", None) is not None:
        cfg = replace(cfg, runs=args.runs)
    return cfg


def _manifest(cfg, seed, extra=None):
    resolved = dump_config(cfg)
    man = {
        "schema": 1,
        "seed": seed,
        "filter": cfg.filter_enabled,
        "config": resolved,
        "config_hash": hashlib.sha256(resolved.encode()).hexdigest(),
    }
    man.update(extra or {})
    return man


def _write_csv(path, header, rows):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        fh.write(CSV_SCHEMA_LINE + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    os.replace(tmp, path)


def _write_record(record, out_dir, cfg):
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "run_record.csv", METRIC_COLUMNS, record.rows())
    snap_rows = []
    for snap in record.snapshots:
        controlled = record.meta["populations"][0]
        for name in record.meta["populations"]:
            pos = snap.positions[name]
            ctrl = snap.controls if name == controlled else None
            for i in range(pos.shape[0]):
                u = ctrl[i] if ctrl is not None else (np.nan, np.nan)
                snap_rows.append(
                    (snap.t, name, i, pos[i, 0], pos[i, 1], u[0], u[1])
                )
    _write_csv(out_dir / "snapshots.csv", SNAPSHOT_COLUMNS, snap_rows)
    man = _manifest(cfg, record.meta["seed"], {"obstacles": record.meta["obstacles"]})
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fixed_layout(cfg):
    if cfg.layout_mode != "fixed":
        return None
    rng = np.random.default_rng(cfg.base_seed)
    return place_obstacles(cfg.scenario.obstacles, rng)


def cmd_run(args):
    cfg = _apply_overrides(_load(args.config), args)
    out = _resolve_out(cfg, args)
    record = run_simulation(
        cfg.scenario, cfg.sim, cfg.filter_enabled, layout=_fixed_layout(cfg)
    )
    _write_record(record, out, cfg)
    print(f"wrote {out / 'run_record.csv'}")
    return EXIT_OK


def _member(payload):
    cfg, index, out_dir, layout_dict = payload
    sim = replace(cfg.sim, seed=cfg.base_seed + index)
    layout = ObstacleSet.from_dict(layout_dict) if layout_dict else None
    record = run_simulation(cfg.scenario, sim, cfg.filter_enabled, layout=layout)
    member_cfg = replace(cfg, sim=sim)
    _write_record(record, out_dir / f"run_{index:03d}", member_cfg)
    return index, record


def cmd_ensemble(args):
    from .analysis import ensemble_stats

    cfg = _apply_overrides(_load(args.config), args)
    out = _resolve_out(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    layout = _fixed_layout(cfg)
    layout_dict = layout.to_dict() if layout else None
    payloads = [(cfg, i, out, layout_dict) for i in range(cfg.runs)]
    records, failures = {}, {}
    workers = max(1, args.workers)
    if workers == 1:
        results = map(_member_safe, payloads)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_member_safe, payloads))
    for index, record, error in results:
        if error is not None:
            failures[index] = error
        else:
            records[index] = record
    if records:
        stats = ensemble_stats([records[i] for i in sorted(records)])
        for which, table in (("mean", stats.mean), ("std", stats.std)):
            rows = (
                [stats.times[i]] + [table[c][i] for c in METRIC_COLUMNS[1:]]
                for i in range(len(stats.times))
            )
            _write_csv(out / f"ensemble_{which}.csv", METRIC_COLUMNS, rows)
    for index in sorted(failures):
        print(f"run {index} failed: {failures[index]}", file=sys.stderr)
    print(f"wrote {len(records)}/{cfg.runs} runs under {out}")
    return EXIT_OK if not failures else EXIT_PARTIAL


def _member_safe(payload):
    try:
        index, record = _member(payload)
        return index, record, None
    except (SetupError, PlacementInfeasibleError, InvalidInputError) as exc:
        return payload[1], None, str(exc)


def cmd_certify(args):
    cfg = _apply_overrides(_load(args.config), args)
    scn = cfg.scenario
    rng = np.random.default_rng(cfg.base_seed)
    layout = _fixed_layout(cfg) or place_obstacles(scn.obstacles, rng)
    if layout.count == 0:
        print("no certificate available: no dangerous region to certify",
              file=sys.stderr)
        return EXIT_NO_CERTIFICATE
    sigma = scn.sigma
    pot = build_potential(layout, GaussKernelSpec(sigma), scn.nodes_per_disk)
    inf_in, inf_out = _grid_infima(pot, args.grid)
    bound = min_overlap_bound(pot, args.mu, args.grid)
    tol = 2.0 * np.pi / args.grid
    eps = getattr(scn, "epsilon", None) or getattr(scn, "epsilon_followers")
    report = {
        "mu": args.mu,
        "min_overlap": bound,
        "inf_inside": inf_in,
        "inf_outside": inf_out,
        "grid_resolution": args.grid,
        "grid_spacing": tol,
        "epsilon": eps,
        "certified": bool(inf_in > inf_out and eps < bound),
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    if inf_in <= inf_out:
        print("no certificate available: potential infimum inside the region "
              "does not exceed the outside infimum", file=sys.stderr)
        return EXIT_NO_CERTIFICATE
    return EXIT_OK


def _read_snapshots(run_dir):
    path = Path(run_dir) / "snapshots.csv"
    if not path.exists():
        raise InvalidInputError(f"no snapshots.csv under {run_dir}")
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# swarmsafe-csv"):
            raise InvalidInputError(f"{path}: missing schema header")
        for row in csv.DictReader(fh):
            rows.append(row)
    return rows


def cmd_diagnose(args):
    cfg = _apply_overrides(_load(args.config), args)
    rows = _read_snapshots(args.run_dir)
    controlled = {"coverage": "agents", "shepherding": "leaders"}[cfg.kind]
    times = sorted({float(r["t"]) for r in rows})
    t_last = times[-1]
    pos, ctrl = [], []
    for r in rows:
        if float(r["t"]) == t_last and r["population"] == controlled and r["u1"]:
            pos.append((float(r["x1"]), float(r["x2"])))
            ctrl.append((float(r["u1"]), float(r["u2"])))
    if not pos:
        print("no corrected-control snapshot available for diagnosis",
              file=sys.stderr)
        return EXIT_NO_DIAGNOSTIC
    scn = cfg.scenario
    w = control_field(
        np.asarray(pos), np.asarray(ctrl), scn.sigma, args.grid
    )
    if cfg.kind == "coverage":
        rho_bar = uniform_density(args.grid)
        D = scn.diffusion
    else:
        rho = grid_eval(lambda x: von_mises_density(x, scn.target), args.grid)
        mass = rho.values.sum() * rho.cell_area
        rho_bar = type(rho)(rho.values / mass)
        D = scn.follower_diffusion
    report = stability_constants(w, rho_bar, D)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="swarmsafe",
        description="Safe mean-field control experiments on the periodic square",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("config", help="config file path or preset name")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--no-filter", action="store_true")
        if out:
            p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="one seeded simulation")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("ensemble", help="independent seeded runs + statistics")
    common(p)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_ensemble)

    p = sub.add_parser("certify", help="minimum-overlap safety certificate")
    common(p, out=False)
    p.add_argument("--mu", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=512)
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("diagnose", help="bounded-stability constants of a run")
    common(p, out=False)
    p.add_argument("run_dir", help="directory containing snapshots.csv")
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_diagnose)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CertificateUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CERTIFICATE
    except (SetupError, PlacementInfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SETUP
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
