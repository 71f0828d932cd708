"""Closed-form point-to-point reliability of multi-lane fabrics.

A routed packet crosses exactly one buffer per stage (single-path fabric),
so the end-to-end survival probability is a series chain of per-stage
buffers, each of which is a parallel bank of lanes: any one working lane
keeps the buffer usable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .errors import ConfigurationError


def _check_probability(value: float, what: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigurationError(f"{what} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class ReliabilityParams:
    """Lane survival probabilities for a fabric of ``stages`` stages.

    ``per_lane_r[i][j]`` is the probability lane j at stage i is operational;
    the uniform case collapses to a single ``r_flit``.
    """

    stages: int
    n_lanes: int
    r_flit: float | None = None
    per_lane_r: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.stages < 1 or self.n_lanes < 1:
            raise ConfigurationError("stages and n_lanes must be >= 1")
        if (self.r_flit is None) == (self.per_lane_r is None):
            raise ConfigurationError("specify exactly one of r_flit or per_lane_r")
        if self.r_flit is not None:
            _check_probability(self.r_flit, "r_flit")
        else:
            if len(self.per_lane_r) != self.stages:
                raise ConfigurationError(
                    f"per_lane_r must have {self.stages} stage rows, got {len(self.per_lane_r)}"
                )
            for row in self.per_lane_r:
                if len(row) != self.n_lanes:
                    raise ConfigurationError(
                        f"each stage row must have {self.n_lanes} lane entries, got {len(row)}"
                    )
                for r in row:
                    _check_probability(r, "lane reliability")


def series_reliability(reliabilities: Sequence[float]) -> float:
    """All elements must work: the product. An empty chain is vacuously 1."""
    out = 1.0
    for r in reliabilities:
        _check_probability(r, "series element reliability")
        out *= r
    return out


def parallel_reliability(reliabilities: Sequence[float]) -> float:
    """At least one element must work. No branches at all means certain failure."""
    fail = 1.0
    for r in reliabilities:
        _check_probability(r, "parallel element reliability")
        fail *= 1.0 - r
    return 1.0 - fail if reliabilities else 0.0


def buffer_reliability(lane_rs: Sequence[float]) -> float:
    """Survival of one multi-lane buffer: its lanes are a parallel bank."""
    return parallel_reliability(lane_rs)


def min_reliability(params: ReliabilityParams) -> float:
    """End-to-end path reliability from per-stage, per-lane survival rates."""
    if params.per_lane_r is None:
        return min_reliability_uniform(params.r_flit, params.n_lanes, params.stages)
    return series_reliability([buffer_reliability(row) for row in params.per_lane_r])


def min_reliability_uniform(r_flit: float, n_lanes: int, stages: int) -> float:
    """Uniform-fabric path reliability: (1 - (1 - r)^lanes)^stages."""
    _check_probability(r_flit, "r_flit")
    if n_lanes < 1 or stages < 1:
        raise ConfigurationError("n_lanes and stages must be >= 1")
    return (1.0 - (1.0 - r_flit) ** n_lanes) ** stages


def reliability_sweep(
    r_grid: Iterable[float],
    lanes_list: Iterable[int],
    radix_list: Iterable[int],
) -> list[dict]:
    """Grid of path reliabilities as rows: radix, n_lanes, r_flit, R_MIN."""
    rows = []
    for radix in radix_list:
        for n_lanes in lanes_list:
            for r in r_grid:
                rows.append(
                    {
                        "radix": radix,
                        "n_lanes": n_lanes,
                        "r_flit": r,
                        "R_MIN": min_reliability_uniform(r, n_lanes, radix),
                    }
                )
    if not rows:
        raise ConfigurationError("reliability sweep needs non-empty grids")
    return rows


def write_reliability_csv(rows: list[dict], stream: TextIO) -> None:
    """Emit sweep rows with reliabilities at 6 decimal places."""
    writer = csv.writer(stream)
    writer.writerow(["radix", "n_lanes", "r_flit", "R_MIN"])
    for row in rows:
        writer.writerow(
            [row["radix"], row["n_lanes"], f"{row['r_flit']:.6f}", f"{row['R_MIN']:.6f}"]
        )
