"""Figure rendering for sweep outputs.

Each renderer takes the rows produced by the corresponding experiment and
writes one PNG next to the delimited output. CSV stays the machine-readable
contract; these files are the human-readable report.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ConfigurationError


def _series(rows, group_keys, x_key, y_key):
    groups = defaultdict(list)
    for row in rows:
        groups[tuple(row[k] for k in group_keys)].append((row[x_key], row[y_key]))
    return {k: sorted(v) for k, v in sorted(groups.items())}


def _aggregates_only(rows: list[dict]) -> list[dict]:
    # Sweep output carries one aggregate row per config ("c012") and,
    # optionally, per-replication rows ("c012r03"); plot the aggregates.
    if rows and "run_id" in rows[0]:
        return [r for r in rows if "r" not in r["run_id"][1:]]
    return rows


def plot_reliability_curves(rows: list[dict], path: str) -> None:
    """Path reliability vs lane reliability, one curve per (radix, lanes)."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for (radix, lanes), pts in _series(rows, ("radix", "n_lanes"), "r_flit", "R_MIN").items():
        style = "--" if lanes == 1 else "-"
        ax.plot(*zip(*pts), style, label=f"radix {radix}, {lanes} lane{'s' if lanes > 1 else ''}")
    ax.set_xlabel("lane reliability")
    ax.set_ylabel("end-to-end path reliability")
    ax.legend(fontsize=7, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_cost_curves(rows: list[dict], path: str) -> None:
    """Units of cost vs radix, one curve per fabric family / lane count."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for (kind, lanes), pts in _series(rows, ("kind", "n_lanes"), "radix", "cost_units").items():
        style = "--" if kind == "Proposed" else "-"
        label = f"{kind}-{lanes}L" if kind == "Proposed" else kind
        ax.plot(*zip(*pts), style, marker="o", ms=3, label=label)
    ax.set_xlabel("radix (stages)")
    ax.set_ylabel("units of cost")
    ax.set_yscale("log")
    ax.legend(fontsize=7, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_throughput_vs_lanes(rows: list[dict], path: str) -> None:
    """Normalized throughput vs lane count, one curve per radix."""
    agg = _aggregates_only(rows)
    fig, ax = plt.subplots(figsize=(7, 5))
    for (radix,), pts in _series(agg, ("radix",), "n_lanes", "normalized_throughput").items():
        ax.plot(*zip(*pts), marker="o", ms=4, label=f"radix {radix}")
    ax.set_xlabel("storage lanes per buffer")
    ax.set_ylabel("normalized throughput")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_delay_vs_load(rows: list[dict], path: str) -> None:
    """Mean packet delay vs offered load, one curve per lane count.

    Non-steady points (saturation) are drawn hollow: their delay estimate
    is still climbing when the run hits the cycle limit.
    """
    agg = _aggregates_only(rows)
    fig, ax = plt.subplots(figsize=(7, 5))
    for (lanes,), pts in _series(agg, ("n_lanes",), "offered_load", "mean_total_delay").items():
        line = ax.plot(*zip(*pts), marker="o", ms=4, label=f"{lanes} lane{'s' if lanes > 1 else ''}")
        color = line[0].get_color()
        unsteady = [
            (r["offered_load"], r["mean_total_delay"])
            for r in agg
            if r["n_lanes"] == lanes and not r["steady_state_reached"]
        ]
        if unsteady:
            ax.plot(*zip(*sorted(unsteady)), "o", ms=7, mfc="none", color=color)
    ax.set_xlabel("offered load (flits/cycle/input)")
    ax.set_ylabel("mean packet delay (cycles)")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


FIGURE_RENDERERS = {
    "reliability": plot_reliability_curves,
    "cost": plot_cost_curves,
    "fig10": plot_throughput_vs_lanes,
    "fig11": plot_delay_vs_load,
}


def render_figure(kind: str, name: str, rows: list[dict], path: str) -> None:
    """Dispatch to the renderer for a figure preset or sweep family."""
    if kind == "reliability":
        plot_reliability_curves(rows, path)
    elif kind == "cost":
        plot_cost_curves(rows, path)
    elif kind == "simulate":
        if name == "fig11":
            plot_delay_vs_load(rows, path)
        else:
            plot_throughput_vs_lanes(rows, path)
    else:
        raise ConfigurationError(f"no renderer for figure kind {kind!r}")
