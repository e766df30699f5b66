"""Time-series and scatter figure builders for swarmsafe outputs."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import locate_metrics, locate_run_dir, read_manifest, read_snapshots, read_table

# deterministic output: no timestamps or library fingerprints in the PNG
_METADATA = {"Software": "swarmplots"}


def _load_condition(in_dir):
    mean_path, std_path = locate_metrics(in_dir)
    mean = read_table(mean_path)
    std = read_table(std_path) if std_path else None
    return mean, std


def _conditions(in_dir):
    """One or two (label, mean, std) tuples; `on/` + `off/` subdirs pair up."""
    in_dir = Path(in_dir)
    pair = [(in_dir / "on", "filter on"), (in_dir / "off", "filter off")]
    if all(p.exists() for p, _ in pair):
        return [(lbl, *_load_condition(p)) for p, lbl in pair]
    return [("", *_load_condition(in_dir))]


def _band(ax, t, mean, std, label, color):
    ax.plot(t, mean, color=color, label=label or None)
    if std is not None:
        ax.fill_between(t, mean - std, mean + std, color=color, alpha=0.25,
                        linewidth=0)


def plot_timeseries(in_dir, out_file):
    """Penetration (and goal-fraction) curves, mean with a +-1 std band.

    Coverage outputs produce a single panel; shepherding outputs (detected
    by a populated follower column) produce one panel per population.
    """
    conditions = _conditions(in_dir)
    shepherding = any(
        np.any(np.isfinite(mean["frac_in_F"])) for _, mean, _ in conditions
    )
    colors = ("tab:blue", "tab:red")

    if shepherding:
        fig, (ax_l, ax_f) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
        for (label, mean, std), color in zip(conditions, colors):
            sfx = f" ({label})" if label else ""
            _band(ax_l, mean["t"], mean["frac_in_L"],
                  std and std["frac_in_L"], "leaders inside" + sfx, color)
            _band(ax_f, mean["t"], mean["frac_in_F"],
                  std and std["frac_in_F"], "followers inside" + sfx, color)
            ax_f.plot(mean["t"], mean["frac_goal"], color=color,
                      linestyle="--", label="followers in goal" + sfx)
        ax_l.set_ylabel("leader fraction inside")
        ax_f.set_ylabel("follower fractions")
        ax_f.set_xlabel("t")
        for ax in (ax_l, ax_f):
            ax.legend(loc="best", fontsize=8)
        axes = (ax_l, ax_f)
    else:
        fig, ax = plt.subplots(figsize=(7, 4))
        for (label, mean, std), color in zip(conditions, colors):
            sfx = f" ({label})" if label else ""
            _band(ax, mean["t"], mean["frac_in_L"],
                  std and std["frac_in_L"], "fraction inside" + sfx, color)
        ax.set_xlabel("t")
        ax.set_ylabel("fraction inside dangerous region")
        ax.legend(loc="best", fontsize=8)
        axes = (ax,)

    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_file, dpi=150, metadata=_METADATA)
    plt.close(fig)
    return Path(out_file)


def plot_scatter(in_dir, out_file, time=None):
    """Final-snapshot scatter with obstacle disks and the goal circle.

    Populations use distinct markers; an empty snapshot still renders a
    valid figure with the domain axes.
    """
    run_dir = locate_run_dir(in_dir)
    manifest = read_manifest(run_dir)
    snaps = read_snapshots(run_dir / "snapshots.csv")

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.set_xlim(-np.pi, np.pi)
    ax.set_ylim(-np.pi, np.pi)
    ax.set_aspect("equal")

    for center in manifest["centers"]:
        ax.add_patch(plt.Circle(center, manifest["radius"], color="0.75",
                                zorder=1))
    if manifest["kind"] == "shepherding" and manifest["goal_radius"]:
        ax.add_patch(plt.Circle((0.0, 0.0), manifest["goal_radius"],
                                fill=False, linestyle="--", color="green",
                                zorder=2))

    styles = {
        "agents": dict(marker="o", s=12, color="tab:blue", label="agents"),
        "leaders": dict(marker="D", s=18, color="tab:blue", label="leaders"),
        "followers": dict(marker="o", s=10, color="magenta",
                          label="followers"),
    }
    if snaps:
        t = max(snaps) if time is None else time
        for pop, pts in sorted(snaps[t].items()):
            style = styles.get(pop, dict(marker="o", s=10, label=pop))
            ax.scatter(pts[:, 0], pts[:, 1], zorder=3, **style)
        ax.legend(loc="upper right", fontsize=8)
        ax.set_title(f"t = {t:g}")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(out_file, dpi=150, metadata=_METADATA)
    plt.close(fig)
    return Path(out_file)
