"""Throughput, delay, and utilization metrics plus run-control statistics.

Delay decomposition for a delivered packet:

    wait     = injected - generated        (time queued at the input)
    service  = delivered - injected - (radix - 1)
    traverse = radix - 1                   (drain across the remaining stages)
    total    = wait + service + traverse = delivered - generated

The floor for total delay is ``ideal_delay``: the stage count plus the
packet length minus one, reached only by a never-blocked worm.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .config import SimConfig
from .errors import ConfigurationError
from .topology import NetworkShape
from .traffic import Packet


def ideal_delay(radix: int, p_length: int) -> int:
    """Cycles a contention-free packet needs end to end."""
    if radix < 1 or p_length < 1:
        raise ConfigurationError("radix and packet length must be >= 1")
    return radix + p_length - 1


def max_throughput(n_max: int, radix: int, p_length: int) -> float:
    """Contention-free packet rate: n_max packets per ideal delay."""
    if n_max < 1:
        raise ConfigurationError(f"n_max must be >= 1, got {n_max}")
    return n_max / ideal_delay(radix, p_length)


def normalized_throughput(
    actual_flits_per_cycle: float,
    shape: NetworkShape,
    mode: str = "per-port",
    n_flits: int | None = None,
) -> float:
    """Delivered throughput scaled to the fabric's capacity.

    "per-port" divides the delivered flit rate by N, the aggregate
    one-flit-per-cycle ejection capacity, and so is bounded by 1. "eq5"
    divides the packet rate by max_throughput with n_max = N; under
    pipelined operation the ratio can exceed 1, so it is an alternate,
    clearly-labeled mode.
    """
    if actual_flits_per_cycle < 0:
        raise ConfigurationError("throughput cannot be negative")
    if mode == "per-port":
        return actual_flits_per_cycle / shape.n_ports
    if mode == "eq5":
        if n_flits is None:
            raise ConfigurationError("eq5 normalization requires n_flits")
        packets_per_cycle = actual_flits_per_cycle / n_flits
        return packets_per_cycle / max_throughput(shape.n_ports, shape.radix, n_flits)
    raise ConfigurationError(f"unknown normalization mode {mode!r}")


def buffer_utilization(busy_lanes: int, total_lanes: int) -> float:
    """Instantaneous fraction of lane storages holding or reserved by a worm."""
    if total_lanes <= 0:
        raise ConfigurationError("total_lanes must be positive")
    if not 0 <= busy_lanes <= total_lanes:
        raise ConfigurationError(f"busy_lanes {busy_lanes} outside 0..{total_lanes}")
    return busy_lanes / total_lanes


def delay_decomposition(packet: Packet, radix: int) -> tuple[int, int, int, int]:
    """(wait, service, traverse, total) for a delivered packet."""
    if packet.injected_cycle is None or packet.delivered_cycle is None:
        raise ConfigurationError(f"packet {packet.id} was not delivered")
    wait = packet.injected_cycle - packet.generated_cycle
    traverse = radix - 1
    total = packet.delivered_cycle - packet.generated_cycle
    service = total - wait - traverse
    return wait, service, traverse, total


@dataclass
class SteadyStateDetector:
    """Convergence test over mutually exclusive measurement windows.

    Converged once ``windows_required`` consecutive window statistics have a
    sample standard deviation within ``tolerance`` of their mean. An all-zero
    window set also counts as converged (idle network); a zero mean with any
    nonzero window does not.
    """

    window_cycles: int
    windows_required: int = 5
    tolerance: float = 0.04
    window_stats: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.window_cycles < 1 or self.windows_required < 1:
            raise ConfigurationError("window_cycles and windows_required must be >= 1")
        if self.tolerance <= 0:
            raise ConfigurationError(f"tolerance must be > 0, got {self.tolerance}")

    def update(self, window_value: float) -> bool:
        self.window_stats.append(window_value)
        if len(self.window_stats) > self.windows_required:
            del self.window_stats[0]
        return self.converged()

    def converged(self) -> bool:
        if len(self.window_stats) < self.windows_required:
            return False
        mean = statistics.fmean(self.window_stats)
        if mean == 0.0:
            return all(v == 0.0 for v in self.window_stats)
        sd = statistics.stdev(self.window_stats)
        return sd <= self.tolerance * abs(mean)


def steady_state_update(detector: SteadyStateDetector, window_value: float) -> bool:
    """Feed one completed window statistic; True once the run is steady."""
    return detector.update(window_value)


@dataclass(frozen=True)
class MetricsRecord:
    """Per-run counters and derived metrics over the measured region.

    Delay means are over packets delivered after warm-up and are reported
    as 0.0 when nothing was delivered (packets_delivered tells them apart).
    """

    config: SimConfig
    seed: int
    cycles_measured: int
    termination_cycle: int
    steady_state_reached: bool
    packets_delivered: int
    flits_delivered: int
    throughput_flits_per_cycle: float
    normalized_throughput: float
    mean_wait: float
    mean_service: float
    mean_total_delay: float
    buffer_utilization: float
    undelivered_packets: int


AGGREGATED_FIELDS = (
    "cycles_measured",
    "termination_cycle",
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


@dataclass(frozen=True)
class ReplicationSummary:
    """Mean and sample standard deviation of each metric across replications."""

    config: SimConfig
    n_replications: int
    base_seed: int
    mean: dict[str, float]
    std: dict[str, float]
    all_steady: bool


def aggregate_replications(records: list[MetricsRecord]) -> ReplicationSummary:
    """Average seeded replications of one configuration.

    A single record yields zero standard deviations. Records whose configs
    differ in anything but the seed are rejected.
    """
    if not records:
        raise ConfigurationError("need at least one record to aggregate")
    sig = records[0].config.signature()
    if any(r.config.signature() != sig for r in records[1:]):
        raise ConfigurationError("replication records have heterogeneous configurations")
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for name in AGGREGATED_FIELDS:
        values = [float(getattr(r, name)) for r in records]
        mean[name] = statistics.fmean(values)
        std[name] = statistics.stdev(values) if len(values) > 1 else 0.0
    return ReplicationSummary(
        config=records[0].config,
        n_replications=len(records),
        base_seed=records[0].config.base_seed,
        mean=mean,
        std=std,
        all_steady=all(r.steady_state_reached for r in records),
    )
