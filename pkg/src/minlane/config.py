"""Run configuration and validation."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import ConfigurationError

LOAD_INTERPRETATIONS = ("flit-rate", "packet-rate")
NORMALIZATION_MODES = ("per-port", "eq5")
LANE_SELECT_MODES = ("lowest", "random", "round-robin")
ARBITRATION_MODES = ("two-phase", "output-flat")


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines one simulation run (together with a seed).

    ``offered_load`` is normalized to [0, 1]; by default it is read as a
    flit rate per input per cycle (see ArrivalModel.from_offered_load).
    When ``total_buffer_flits`` is set, the per-lane capacity is derived as
    floor(total / n_lanes) so lane-count sweeps hold channel storage fixed.
    """

    radix: int = 4
    n_lanes: int = 2
    lane_capacity_flits: int = 2
    n_flits_per_packet: int = 12
    offered_load: float = 0.5
    load_interpretation: str = "flit-rate"
    warmup_cycles: int = 1000
    max_cycles: int = 20000
    steady_window: int = 1000
    steady_windows_required: int = 5
    steady_tolerance: float = 0.04
    replications: int = 10
    base_seed: int = 1
    normalization_mode: str = "per-port"
    lane_select: str = "lowest"
    arbitration: str = "output-flat"
    total_buffer_flits: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.radix <= 20:
            raise ConfigurationError(f"radix must be in 1..20, got {self.radix}")
        if self.n_lanes < 1:
            raise ConfigurationError(f"n_lanes must be >= 1, got {self.n_lanes}")
        if self.lane_capacity_flits < 1:
            raise ConfigurationError(
                f"lane_capacity_flits must be >= 1, got {self.lane_capacity_flits}"
            )
        if self.total_buffer_flits is not None and self.total_buffer_flits < self.n_lanes:
            raise ConfigurationError(
                "total_buffer_flits must allow at least one flit per lane "
                f"(got {self.total_buffer_flits} for {self.n_lanes} lanes)"
            )
        if self.n_flits_per_packet < 1:
            raise ConfigurationError(
                f"n_flits_per_packet must be >= 1, got {self.n_flits_per_packet}"
            )
        if not 0.0 <= self.offered_load <= 1.0:
            raise ConfigurationError(
                f"offered_load must be in [0, 1], got {self.offered_load}"
            )
        if self.load_interpretation not in LOAD_INTERPRETATIONS:
            raise ConfigurationError(
                f"load_interpretation must be one of {LOAD_INTERPRETATIONS}, "
                f"got {self.load_interpretation!r}"
            )
        if self.warmup_cycles < 0:
            raise ConfigurationError(f"warmup_cycles must be >= 0, got {self.warmup_cycles}")
        if self.max_cycles <= self.warmup_cycles:
            raise ConfigurationError(
                f"max_cycles ({self.max_cycles}) must exceed warmup_cycles "
                f"({self.warmup_cycles})"
            )
        if self.steady_window < 1:
            raise ConfigurationError(f"steady_window must be >= 1, got {self.steady_window}")
        if self.steady_windows_required < 1:
            raise ConfigurationError(
                f"steady_windows_required must be >= 1, got {self.steady_windows_required}"
            )
        if self.steady_tolerance <= 0:
            raise ConfigurationError(
                f"steady_tolerance must be > 0, got {self.steady_tolerance}"
            )
        if self.replications < 1:
            raise ConfigurationError(f"replications must be >= 1, got {self.replications}")
        if self.normalization_mode not in NORMALIZATION_MODES:
            raise ConfigurationError(
                f"normalization_mode must be one of {NORMALIZATION_MODES}, "
                f"got {self.normalization_mode!r}"
            )
        if self.lane_select not in LANE_SELECT_MODES:
            raise ConfigurationError(
                f"lane_select must be one of {LANE_SELECT_MODES}, got {self.lane_select!r}"
            )
        if self.arbitration not in ARBITRATION_MODES:
            raise ConfigurationError(
                f"arbitration must be one of {ARBITRATION_MODES}, got {self.arbitration!r}"
            )

    @property
    def lane_capacity(self) -> int:
        """Effective per-lane capacity, honoring the fixed-total-storage mode."""
        if self.total_buffer_flits is not None:
            return max(1, self.total_buffer_flits // self.n_lanes)
        return self.lane_capacity_flits

    def with_seed(self, base_seed: int) -> "SimConfig":
        return replace(self, base_seed=base_seed)

    def signature(self) -> tuple:
        """Config identity ignoring the seed, for replication homogeneity checks."""
        return tuple(
            getattr(self, f.name) for f in fields(self) if f.name != "base_seed"
        )


def config_from_mapping(values: dict) -> SimConfig:
    """Build a SimConfig from a plain mapping, rejecting unknown keys."""
    known = {f.name for f in fields(SimConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"unknown configuration key(s): {sorted(unknown)}")
    return SimConfig(**values)
