"""Command-line front end.

Subcommands:

  simulate     one configuration, replicated and aggregated
  sweep        cartesian sweep over --radix/--lanes/--load lists
  reliability  closed-form path-reliability sweep
  cost         complexity / cost-unit sweep across fabric families
  figure       canned studies (fig5..fig11): CSV plus a rendered PNG

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import costmodel, experiments, plots, reliability
from .config import (
    ARBITRATION_MODES,
    LANE_SELECT_MODES,
    LOAD_INTERPRETATIONS,
    NORMALIZATION_MODES,
    SimConfig,
    config_from_mapping,
)
from .engine import run as run_simulation
from .errors import ConfigurationError, SimulationError
from .experiments import CSV_COLUMNS, FIGURE_SPECS

CONFIG_FLAGS = {
    "radix": "radix",
    "lanes": "n_lanes",
    "lane_capacity": "lane_capacity_flits",
    "flits": "n_flits_per_packet",
    "load": "offered_load",
    "load_as": "load_interpretation",
    "warmup": "warmup_cycles",
    "max_cycles": "max_cycles",
    "window": "steady_window",
    "windows": "steady_windows_required",
    "tolerance": "steady_tolerance",
    "replications": "replications",
    "seed": "base_seed",
    "normalization": "normalization_mode",
    "lane_select": "lane_select",
    "arbitration": "arbitration",
    "total_buffer": "total_buffer_flits",
}


def _add_sim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="JSON file of config keys; flags override it")
    parser.add_argument("--radix", type=int)
    parser.add_argument("--lanes", type=int)
    parser.add_argument("--lane-capacity", type=int, dest="lane_capacity")
    parser.add_argument("--flits", type=int)
    parser.add_argument("--load", type=float)
    parser.add_argument("--load-as", choices=LOAD_INTERPRETATIONS, dest="load_as")
    parser.add_argument("--warmup", type=int)
    parser.add_argument("--max-cycles", type=int, dest="max_cycles")
    parser.add_argument("--window", type=int)
    parser.add_argument("--windows", type=int)
    parser.add_argument("--tolerance", type=float)
    parser.add_argument("--replications", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--normalization", choices=NORMALIZATION_MODES)
    parser.add_argument("--lane-select", choices=LANE_SELECT_MODES, dest="lane_select")
    parser.add_argument("--arbitration", choices=ARBITRATION_MODES)
    parser.add_argument("--total-buffer", type=int, dest="total_buffer")
    parser.add_argument("--per-replication", action="store_true",
                        help="also emit one row per seeded replication")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for replications")
    parser.add_argument("--trace", action="store_true",
                        help="print per-flit events (cycle event packet stage se lane) to stderr")


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", metavar="PATH",
                        help="output file or directory (default: $MINLANE_OUT_DIR or stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this interface reserves 2 for
    runtime failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="minlane",
        description="multi-lane wormhole interconnection fabric: simulator and analytic studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one configuration")
    _add_sim_flags(p_sim)
    _add_output_flags(p_sim)

    p_sweep = sub.add_parser("sweep", help="sweep radix/lanes/load axes")
    _add_sim_flags(p_sweep)
    _add_output_flags(p_sweep)
    p_sweep.add_argument("--radix-list", type=int, nargs="+")
    p_sweep.add_argument("--lanes-list", type=int, nargs="+")
    p_sweep.add_argument("--load-list", type=float, nargs="+")

    p_rel = sub.add_parser("reliability", help="path-reliability sweep")
    _add_output_flags(p_rel)
    p_rel.add_argument("--r-grid", type=float, nargs="+",
                       default=[round(0.9 + 0.005 * i, 10) for i in range(21)])
    p_rel.add_argument("--lanes-list", type=int, nargs="+", default=[1, 2, 4])
    p_rel.add_argument("--radix-list", type=int, nargs="+", default=list(range(3, 11)))
    p_rel.add_argument("--plot", action="store_true", help="render a PNG next to the output")

    p_cost = sub.add_parser("cost", help="complexity and cost sweep")
    _add_output_flags(p_cost)
    p_cost.add_argument("--radix-list", type=int, nargs="+", default=list(range(3, 11)))
    p_cost.add_argument("--lanes-list", type=int, nargs="+", default=[1, 2, 4, 10])
    p_cost.add_argument("--kinds", nargs="+", default=[k.value for k in costmodel.FabricKind],
                        choices=[k.value for k in costmodel.FabricKind])
    p_cost.add_argument("--se-cost-units", type=float, default=4.0, dest="se_cost_units")
    p_cost.add_argument("--plot", action="store_true", help="render a PNG next to the output")

    p_fig = sub.add_parser("figure", help="run a canned study and render it")
    p_fig.add_argument("name", choices=sorted(FIGURE_SPECS))
    _add_sim_flags(p_fig)
    _add_output_flags(p_fig)
    p_fig.add_argument("--radix-list", type=int, nargs="+", help="override the preset radix axis")
    p_fig.add_argument("--lanes-list", type=int, nargs="+", help="override the preset lane axis")
    p_fig.add_argument("--load-list", type=float, nargs="+", help="override the preset load axis")
    p_fig.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
    return parser


def resolve_config(args: argparse.Namespace) -> SimConfig:
    """Merge config file values and flags (flags win) into a SimConfig."""
    values: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigurationError("config file must hold a JSON object")
        values.update(file_values)
    for flag, key in CONFIG_FLAGS.items():
        flag_value = getattr(args, flag, None)
        if flag_value is not None:
            values[key] = flag_value
    return config_from_mapping(values)


def _open_output(args: argparse.Namespace, default_name: str):
    out = getattr(args, "out", None)
    if out is None:
        env_dir = os.environ.get(experiments.OUTPUT_DIR_ENV)
        if env_dir is None:
            return sys.stdout, None
        out = env_dir
    if os.path.isdir(out) or out.endswith(os.sep):
        os.makedirs(out, exist_ok=True)
        out = os.path.join(out, default_name + ("." + args.format))
    else:
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
    return open(out, "w", newline=""), out


def _emit(rows: list[dict], columns, args: argparse.Namespace, default_name: str) -> str | None:
    stream, path = _open_output(args, default_name)
    try:
        if args.format == "json":
            experiments.write_rows_json(rows, stream)
        else:
            experiments.write_rows_csv(rows, stream, columns)
    finally:
        if stream is not sys.stdout:
            stream.close()
    return path


def _trace_fn(enabled: bool):
    if not enabled:
        return None

    def trace(cycle, event, packet_id, stage, se, lane):
        print(f"{cycle} {event} {packet_id} {stage} {se} {lane}", file=sys.stderr)

    return trace


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    if args.trace:
        # Tracing implies a single observable run.
        record = run_simulation(config, seed=config.base_seed, trace=_trace_fn(True))
        records = [record]
    else:
        records = experiments.run_replications(config, jobs=args.jobs)
    summary = experiments.aggregate_replications(records)
    rows = experiments.simulation_rows(
        [config], [summary], [records] if args.per_replication else None
    )
    path = _emit(rows, CSV_COLUMNS, args, "simulate")
    _print_summary(summary, path)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    base = resolve_config(args)
    configs = experiments.sweep_configs(base, args.radix_list, args.lanes_list, args.load_list)
    summaries, records = experiments.run_config_set_records(configs, jobs=args.jobs)
    rows = experiments.simulation_rows(
        configs, summaries, records if args.per_replication else None
    )
    path = _emit(rows, CSV_COLUMNS, args, "sweep")
    print(f"{len(configs)} configurations x {base.replications} replications"
          + (f" -> {path}" if path else ""))
    return 0


def cmd_reliability(args: argparse.Namespace) -> int:
    rows = reliability.reliability_sweep(args.r_grid, args.lanes_list, args.radix_list)
    columns = ["radix", "n_lanes", "r_flit", "R_MIN"]
    path = _emit(rows, columns, args, "reliability")
    if args.plot and path:
        png = os.path.splitext(path)[0] + ".png"
        plots.plot_reliability_curves(rows, png)
        print(f"wrote {path} and {png}")
    elif path:
        print(f"wrote {path}")
    return 0


def cmd_cost(args: argparse.Namespace) -> int:
    kinds = [costmodel.FabricKind(k) for k in args.kinds]
    rows = costmodel.cost_sweep(
        args.radix_list, args.lanes_list, kinds,
        costmodel.CostConfig(se_cost_units=args.se_cost_units),
    )
    columns = ["kind", "radix", "n_lanes", "complexity", "cost_units"]
    path = _emit(rows, columns, args, "cost")
    if args.plot and path:
        png = os.path.splitext(path)[0] + ".png"
        plots.plot_cost_curves(rows, png)
        print(f"wrote {path} and {png}")
    elif path:
        print(f"wrote {path}")
    return 0


def cmd_figure(args: argparse.Namespace) -> int:
    spec = FIGURE_SPECS[args.name]
    if args.radix_list or args.lanes_list or args.load_list:
        spec = experiments.override_figure_axes(
            spec, args.radix_list, args.lanes_list, args.load_list
        )
    base = resolve_config(args)
    rows, columns = experiments.figure_rows(spec, base, jobs=args.jobs)
    path = _emit(rows, columns, args, spec.name)
    if not args.no_plot and path:
        png = os.path.splitext(path)[0] + ".png"
        plots.render_figure(spec.kind, spec.name, rows, png)
        print(f"{spec.name}: {spec.description}\nwrote {path} and {png}")
    elif path:
        print(f"{spec.name}: {spec.description}\nwrote {path}")
    return 0


def _print_summary(summary, path: str | None) -> None:
    m = summary.mean
    print(
        f"radix {summary.config.radix}, {summary.config.n_lanes} lanes, "
        f"load {summary.config.offered_load:g}: "
        f"ThN={m['normalized_throughput']:.4f} "
        f"delay={m['mean_total_delay']:.2f} "
        f"util={m['buffer_utilization']:.4f} "
        f"steady={summary.all_steady} "
        f"({summary.n_replications} replications)"
        + (f" -> {path}" if path else "")
    )


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "reliability": cmd_reliability,
    "cost": cmd_cost,
    "figure": cmd_figure,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
