"""Synthesized swarmsafe-format output trees for frontend tests.

The frontend consumes only the published CSV/JSON contracts, so fixtures
write those files by hand instead of importing the simulator.
"""

import json

import numpy as np
import pytest

SCHEMA_LINE = "# swarmsafe-csv schema=1"
METRIC_HEADER = "t,H_L,H_F,frac_in_L,frac_in_F,frac_goal,deviation,violations"


def write_metrics(path, times, frac_l, frac_f=None, frac_goal=None):
    lines = [SCHEMA_LINE, METRIC_HEADER]
    for i, t in enumerate(times):
        ff = "" if frac_f is None else repr(frac_f[i])
        fg = "" if frac_goal is None else repr(frac_goal[i])
        lines.append(f"{t},0.05,{'' if frac_f is None else '0.04'},"
                     f"{frac_l[i]},{ff},{fg},0.1,0")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_snapshots(path, times, pops):
    lines = [SCHEMA_LINE, "t,population,index,x1,x2,u1,u2"]
    rng = np.random.default_rng(0)
    for t in times:
        for pop, n in pops:
            pts = rng.uniform(-3.0, 3.0, (n, 2))
            for i in range(n):
                lines.append(f"{t},{pop},{i},{pts[i, 0]},{pts[i, 1]},,")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_manifest(run_dir, kind, filter_enabled=True, goal_radius=None):
    config = f'schema = 1\nkind = "{kind}"\n'
    if goal_radius is not None:
        config += f"goal_radius = {goal_radius}\n"
    man = {
        "schema": 1,
        "config": config,
        "filter": filter_enabled,
        "obstacles": {
            "centers": [[1.5, 0.0], [-1.5, 0.0]],
            "radius": 0.5,
        },
    }
    (run_dir / "manifest.json").write_text(
        json.dumps(man, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


@pytest.fixture
def coverage_run(tmp_path):
    """Single coverage run directory: run_record + snapshots + manifest."""
    run = tmp_path / "cov_run"
    run.mkdir()
    times = [0.0, 1.0, 2.0]
    write_metrics(run / "run_record.csv", times, [0.1, 0.05, 0.02])
    write_snapshots(run / "snapshots.csv", times, [("agents", 8)])
    write_manifest(run, "coverage")
    return run


@pytest.fixture
def shepherding_ensemble(tmp_path):
    """Paired on/off shepherding ensembles with mean, std and one member."""
    root = tmp_path / "shep"
    times = [0.0, 1.0, 2.0]
    for cond, fl in (("on", [0.01, 0.01, 0.0]), ("off", [0.2, 0.15, 0.1])):
        d = root / cond
        d.mkdir(parents=True)
        write_metrics(d / "ensemble_mean.csv", times, fl,
                      frac_f=[0.02, 0.01, 0.0], frac_goal=[0.0, 0.5, 0.95])
        write_metrics(d / "ensemble_std.csv", times, [0.01] * 3,
                      frac_f=[0.005] * 3, frac_goal=[0.02] * 3)
        member = d / "run_000"
        member.mkdir()
        write_metrics(member / "run_record.csv", times, fl,
                      frac_f=[0.02, 0.01, 0.0], frac_goal=[0.0, 0.5, 0.95])
        write_snapshots(member / "snapshots.csv", times,
                        [("leaders", 5), ("followers", 12)])
        write_manifest(member, "shepherding", goal_radius=1.0)
    return root
