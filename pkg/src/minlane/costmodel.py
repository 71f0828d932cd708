"""Complexity and hardware-cost proxies for the studied fabric families.

Complexity counts switch elements (scaled by lane count for the multi-lane
fabric); cost multiplies by a per-SE unit price, four units for a 2x2 SE
by the usual port-product convention, scaling linearly with lane count.
The comparison fabrics are fixed single-lane designs, so lane multipliers
never apply to them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, TextIO

from .errors import ConfigurationError


class FabricKind(str, Enum):
    PROPOSED = "Proposed"
    EGN = "EGN"
    ASEN = "ASEN"
    PARS = "Pars"
    TWO_LAYERED = "TwoLayered"
    THREE_LAYERED = "ThreeLayered"


SINGLE_LANE_KINDS = tuple(k for k in FabricKind if k is not FabricKind.PROPOSED)


@dataclass(frozen=True)
class CostConfig:
    """Unit price of one single-lane 2x2 SE (default 4 = its port product)."""

    se_cost_units: float = 4.0

    def __post_init__(self) -> None:
        if self.se_cost_units <= 0:
            raise ConfigurationError(f"se_cost_units must be > 0, got {self.se_cost_units}")


def _log2_ports(n_ports: int) -> int:
    if n_ports < 2 or n_ports & (n_ports - 1):
        raise ConfigurationError(f"port count must be a power of two >= 2, got {n_ports}")
    return n_ports.bit_length() - 1


def complexity(kind: FabricKind, n_ports: int, n_lanes: int = 1) -> float:
    """SE-count complexity of the fabric; lane count applies only to Proposed."""
    if n_lanes < 1:
        raise ConfigurationError(f"n_lanes must be >= 1, got {n_lanes}")
    n = n_ports
    l = _log2_ports(n)
    if kind is FabricKind.PROPOSED:
        return (n / 2) * l * n_lanes
    if kind is FabricKind.EGN or kind is FabricKind.PARS:
        return 6 * n + 3 * n * (l - 1)
    if kind is FabricKind.ASEN:
        return 6 * n + 4.5 * n * (l - 2)
    if kind is FabricKind.TWO_LAYERED:
        return (n / 2) * (l - 1) + 2 * n
    if kind is FabricKind.THREE_LAYERED:
        return (n / 2) * (l - 1) + 3 * n
    raise ConfigurationError(f"unknown fabric kind {kind!r}")


def cost_units(
    kind: FabricKind,
    n_ports: int,
    n_lanes: int = 1,
    cost_config: CostConfig | None = None,
) -> float:
    """Hardware cost: SE-equivalent count times the per-SE unit price.

    For the multi-lane fabric the lane count multiplies the cost, one lane's
    worth of storage and control per extra lane.
    """
    cfg = cost_config or CostConfig()
    if kind is FabricKind.PROPOSED:
        ses = (n_ports / 2) * _log2_ports(n_ports)
        return ses * cfg.se_cost_units * n_lanes
    return complexity(kind, n_ports) * cfg.se_cost_units


def cost_sweep(
    radix_list: Iterable[int],
    lanes_list: Iterable[int],
    kinds: Iterable[FabricKind] | None = None,
    cost_config: CostConfig | None = None,
) -> list[dict]:
    """Rows of (kind, radix, n_lanes, complexity, cost_units) for export.

    The comparison fabrics appear once per radix (single-lane); the
    multi-lane fabric appears once per (radix, lane count).
    """
    kinds = tuple(kinds) if kinds is not None else tuple(FabricKind)
    radix_list = list(radix_list)
    lanes_list = list(lanes_list)
    if not radix_list or not lanes_list or not kinds:
        raise ConfigurationError("cost sweep needs non-empty radix, lane, and kind lists")
    rows = []
    for radix in radix_list:
        n = 1 << radix
        for kind in kinds:
            lane_axis = lanes_list if kind is FabricKind.PROPOSED else [1]
            for n_lanes in lane_axis:
                rows.append(
                    {
                        "kind": kind.value,
                        "radix": radix,
                        "n_lanes": n_lanes,
                        "complexity": complexity(kind, n, n_lanes),
                        "cost_units": cost_units(kind, n, n_lanes, cost_config),
                    }
                )
    return rows


def write_cost_csv(rows: list[dict], stream: TextIO) -> None:
    writer = csv.writer(stream)
    writer.writerow(["kind", "radix", "n_lanes", "complexity", "cost_units"])
    for row in rows:
        writer.writerow(
            [
                row["kind"],
                row["radix"],
                row["n_lanes"],
                f"{row['complexity']:g}",
                f"{row['cost_units']:g}",
            ]
        )
