"""Experiment orchestration: replication fan-out, sweeps, presets, output.

Every simulation experiment runs ``replications`` seeded copies of each
configuration (seed = base_seed + replica index), aggregates them, and
emits one row per configuration (optionally per replication too) in a
fixed CSV schema. Reliability and cost experiments are closed-form sweeps.
Output is deterministic: rows are written in configuration order with
full-precision floats, so identical specs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, TextIO

from . import costmodel, reliability
from .config import SimConfig
from .engine import run as run_simulation
from .errors import ConfigurationError
from .metrics import MetricsRecord, ReplicationSummary, aggregate_replications

CSV_COLUMNS = (
    "run_id",
    "radix",
    "N",
    "n_lanes",
    "lane_capacity",
    "n_flits",
    "offered_load",
    "seed",
    "cycles_measured",
    "steady_state_reached",
    "packets_delivered",
    "flits_delivered",
    "throughput_flits_per_cycle",
    "normalized_throughput",
    "mean_wait",
    "mean_service",
    "mean_total_delay",
    "buffer_utilization",
    "undelivered_packets",
)

OUTPUT_DIR_ENV = "MINLANE_OUT_DIR"


def _run_seeded(args: tuple[SimConfig, int]) -> MetricsRecord:
    config, seed = args
    return run_simulation(config, seed=seed)


def run_replications(config: SimConfig, jobs: int = 1) -> list[MetricsRecord]:
    """All seeded replications of one configuration, in seed order."""
    tasks = [(config, config.base_seed + i) for i in range(config.replications)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_seeded, tasks))
    return [_run_seeded(t) for t in tasks]


def run_config_set_records(
    configs: Sequence[SimConfig], jobs: int = 1
) -> tuple[list[ReplicationSummary], list[list[MetricsRecord]]]:
    """Replicate and aggregate every configuration of a sweep.

    Individual runs across all configurations share one worker pool so a
    single expensive configuration cannot serialize the whole sweep.
    """
    tasks = [
        (cfg, cfg.base_seed + i) for cfg in configs for i in range(cfg.replications)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_seeded, tasks))
    else:
        records = [_run_seeded(t) for t in tasks]
    summaries = []
    per_config = []
    pos = 0
    for cfg in configs:
        chunk = records[pos : pos + cfg.replications]
        pos += cfg.replications
        per_config.append(chunk)
        summaries.append(aggregate_replications(chunk))
    return summaries, per_config


def run_config_set(configs: Sequence[SimConfig], jobs: int = 1) -> list[ReplicationSummary]:
    """Aggregate-only variant of run_config_set_records."""
    return run_config_set_records(configs, jobs)[0]


def sweep_configs(
    base: SimConfig,
    radix_list: Iterable[int] | None = None,
    lanes_list: Iterable[int] | None = None,
    load_list: Iterable[float] | None = None,
) -> list[SimConfig]:
    """Cartesian sweep over the requested axes, in (radix, lanes, load) order."""
    radixes = list(radix_list) if radix_list is not None else [base.radix]
    lanes = list(lanes_list) if lanes_list is not None else [base.n_lanes]
    loads = list(load_list) if load_list is not None else [base.offered_load]
    if not radixes or not lanes or not loads:
        raise ConfigurationError("swept axes must be non-empty")
    return [
        replace(base, radix=r, n_lanes=nl, offered_load=ld)
        for r in radixes
        for nl in lanes
        for ld in loads
    ]


# ----------------------------------------------------------------------
# output rows

def _row_from_values(run_id: str, config: SimConfig, seed, values: dict, steady) -> dict:
    return {
        "run_id": run_id,
        "radix": config.radix,
        "N": 1 << config.radix,
        "n_lanes": config.n_lanes,
        "lane_capacity": config.lane_capacity,
        "n_flits": config.n_flits_per_packet,
        "offered_load": config.offered_load,
        "seed": seed,
        "cycles_measured": values["cycles_measured"],
        "steady_state_reached": steady,
        "packets_delivered": values["packets_delivered"],
        "flits_delivered": values["flits_delivered"],
        "throughput_flits_per_cycle": values["throughput_flits_per_cycle"],
        "normalized_throughput": values["normalized_throughput"],
        "mean_wait": values["mean_wait"],
        "mean_service": values["mean_service"],
        "mean_total_delay": values["mean_total_delay"],
        "buffer_utilization": values["buffer_utilization"],
        "undelivered_packets": values["undelivered_packets"],
    }


def record_row(run_id: str, record: MetricsRecord) -> dict:
    values = {name: getattr(record, name) for name in CSV_COLUMNS if hasattr(record, name)}
    return _row_from_values(
        run_id, record.config, record.seed, values, record.steady_state_reached
    )


def summary_row(run_id: str, summary: ReplicationSummary) -> dict:
    return _row_from_values(
        run_id, summary.config, summary.base_seed, summary.mean, summary.all_steady
    )


def simulation_rows(
    configs: Sequence[SimConfig],
    summaries: Sequence[ReplicationSummary] | None = None,
    per_replication_records: Sequence[Sequence[MetricsRecord]] | None = None,
) -> list[dict]:
    """One aggregate row per configuration, then optional per-replication rows."""
    rows = []
    for idx, cfg in enumerate(configs):
        run_id = f"c{idx:03d}"
        if summaries is not None:
            rows.append(summary_row(run_id, summaries[idx]))
        if per_replication_records is not None:
            for j, rec in enumerate(per_replication_records[idx]):
                rows.append(record_row(f"{run_id}r{j:02d}", rec))
    return rows


# Reliability exports are specified at fixed 6-decimal precision; both
# output formats round identically so rows stay value-equal across them.
SIX_DECIMAL_COLUMNS = frozenset({"r_flit", "R_MIN"})


def write_rows_csv(rows: list[dict], stream: TextIO, columns: Sequence[str] = CSV_COLUMNS) -> None:
    writer = csv.writer(stream)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(row[c], c) for c in columns])


def write_rows_json(rows: list[dict], stream: TextIO) -> None:
    rounded = [{k: _json_value(v, k) for k, v in row.items()} for row in rows]
    json.dump(rounded, stream, indent=2, sort_keys=False)
    stream.write("\n")


def _json_value(value, column: str):
    if column in SIX_DECIMAL_COLUMNS and isinstance(value, float):
        return round(value, 6)
    return value


def _format_cell(value, column: str = "") -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if column in SIX_DECIMAL_COLUMNS and isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_cell(text: str):
    """Inverse of _format_cell for round-trip checks and downstream tooling."""
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, ".")


# ----------------------------------------------------------------------
# figure presets

@dataclass(frozen=True)
class FigureSpec:
    """A canned experiment: what to sweep and how to plot it."""

    name: str
    kind: str  # "reliability" | "cost" | "simulate"
    description: str
    radix_list: tuple[int, ...] = ()
    lanes_list: tuple[int, ...] = ()
    load_list: tuple[float, ...] = ()
    r_grid: tuple[float, ...] = ()
    fabric_kinds: tuple[costmodel.FabricKind, ...] = ()
    se_cost_units: float = 1.0


def _r_grid(start: float = 0.90, stop: float = 1.0, step: float = 0.005) -> tuple[float, ...]:
    count = round((stop - start) / step)
    return tuple(round(start + i * step, 10) for i in range(count + 1))


FIGURE_SPECS: dict[str, FigureSpec] = {
    "fig5": FigureSpec(
        name="fig5",
        kind="reliability",
        description="path reliability vs lane reliability, double-lane buffers, radix 3..10",
        radix_list=tuple(range(3, 11)),
        lanes_list=(2,),
        r_grid=_r_grid(),
    ),
    "fig6": FigureSpec(
        name="fig6",
        kind="reliability",
        description="path reliability vs lane reliability, four-lane buffers, radix 3..10",
        radix_list=tuple(range(3, 11)),
        lanes_list=(4,),
        r_grid=_r_grid(),
    ),
    "fig7": FigureSpec(
        name="fig7",
        kind="reliability",
        description="single- vs double-lane path reliability, radix 3..10",
        radix_list=tuple(range(3, 11)),
        lanes_list=(1, 2),
        r_grid=_r_grid(),
    ),
    "fig8": FigureSpec(
        name="fig8",
        kind="cost",
        description="cost vs radix of the multi-lane fabric for several lane counts",
        radix_list=tuple(range(3, 11)),
        lanes_list=(1, 2, 4, 6, 8, 10, 12),
        fabric_kinds=(costmodel.FabricKind.PROPOSED,),
        se_cost_units=1.0,
    ),
    "fig9": FigureSpec(
        name="fig9",
        kind="cost",
        description="cost vs radix across fabric families (single-lane rivals)",
        radix_list=tuple(range(3, 11)),
        lanes_list=(1, 2, 4, 10),
        fabric_kinds=tuple(costmodel.FabricKind),
        se_cost_units=1.0,
    ),
    "fig10": FigureSpec(
        name="fig10",
        kind="simulate",
        description="normalized throughput vs storage lanes at 80% load, 12-flit packets",
        radix_list=(4, 5, 7, 9, 10),
        lanes_list=tuple(range(1, 13)),
        load_list=(0.80,),
    ),
    "fig11": FigureSpec(
        name="fig11",
        kind="simulate",
        description="packet delay vs offered load at radix 8 for several lane counts",
        radix_list=(8,),
        lanes_list=(1, 2, 4, 6, 8, 10),
        load_list=tuple(round(0.05 * i, 2) for i in range(1, 20)),
    ),
}


def override_figure_axes(
    spec: FigureSpec,
    radix_list: Iterable[int] | None,
    lanes_list: Iterable[int] | None,
    load_list: Iterable[float] | None,
) -> FigureSpec:
    """A copy of a preset with some axes replaced (for scaled-down runs)."""
    return replace(
        spec,
        radix_list=tuple(radix_list) if radix_list else spec.radix_list,
        lanes_list=tuple(lanes_list) if lanes_list else spec.lanes_list,
        load_list=tuple(load_list) if load_list else spec.load_list,
    )


def figure_rows(spec: FigureSpec, base: SimConfig, jobs: int = 1) -> tuple[list[dict], list[str]]:
    """Execute a figure preset; returns (rows, column names)."""
    if spec.kind == "reliability":
        rows = reliability.reliability_sweep(spec.r_grid, spec.lanes_list, spec.radix_list)
        return rows, ["radix", "n_lanes", "r_flit", "R_MIN"]
    if spec.kind == "cost":
        rows = costmodel.cost_sweep(
            spec.radix_list,
            spec.lanes_list,
            spec.fabric_kinds,
            costmodel.CostConfig(se_cost_units=spec.se_cost_units),
        )
        return rows, ["kind", "radix", "n_lanes", "complexity", "cost_units"]
    if spec.kind == "simulate":
        configs = sweep_configs(base, spec.radix_list, spec.lanes_list, spec.load_list)
        summaries = run_config_set(configs, jobs=jobs)
        return simulation_rows(configs, summaries), list(CSV_COLUMNS)
    raise ConfigurationError(f"unknown figure kind {spec.kind!r}")
