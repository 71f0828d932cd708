"""Packet generation and flit decomposition.

Each input independently generates at most one packet per cycle (Bernoulli
with probability ``lam``) with a destination drawn uniformly over all
outputs. Packets are fixed-length and split into flits: the header carries
the routing tag, the tail closes the worm, and a one-flit packet is both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

from .errors import ConfigurationError
from .topology import NetworkShape

HEADER = "header"
BODY = "body"
TAIL = "tail"


@dataclass(slots=True)
class Packet:
    """One fixed-length packet and its lifecycle timestamps (in cycles)."""

    id: int
    source: int
    destination: int
    n_flits: int
    generated_cycle: int
    injected_cycle: int | None = None
    delivered_cycle: int | None = None


@dataclass(frozen=True, slots=True)
class Flit:
    """One flow-control unit of a packet.

    seq == 0 is the header (the only flit carrying routing information);
    seq == n_flits - 1 is the tail. Both hold for a one-flit packet.
    """

    packet_id: int
    seq: int
    is_head: bool
    is_tail: bool
    destination: int

    @property
    def kind(self) -> str:
        if self.is_head:
            return HEADER
        return TAIL if self.is_tail else BODY


@dataclass(frozen=True)
class ArrivalModel:
    """Per-input packet generation probability per cycle."""

    lam: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"arrival probability must be in [0, 1], got {self.lam}")

    @classmethod
    def from_offered_load(
        cls, offered_load: float, n_flits: int, interpretation: str = "flit-rate"
    ) -> "ArrivalModel":
        """Derive the packet probability from a normalized offered load.

        "flit-rate" reads the load as flits per cycle per input, so
        lam = load / n_flits keeps load in [0, 1] against the one-flit-per-
        cycle channel capacity. "packet-rate" reads it as packets per cycle
        directly.
        """
        if not 0.0 <= offered_load <= 1.0:
            raise ConfigurationError(f"offered load must be in [0, 1], got {offered_load}")
        if interpretation == "flit-rate":
            return cls(lam=offered_load / n_flits)
        if interpretation == "packet-rate":
            return cls(lam=offered_load)
        raise ConfigurationError(
            f"load interpretation must be 'flit-rate' or 'packet-rate', got {interpretation!r}"
        )


def sample_arrivals(
    model: ArrivalModel,
    shape: NetworkShape,
    rng: Random,
    cycle: int,
    start_id: int = 0,
) -> list[Packet]:
    """New packets for this cycle: 0 or 1 per input, uniform destinations.

    Draw order is fixed (inputs ascending; one uniform variate per input,
    then one destination draw on a hit) so that seeded runs are reproducible.
    n_flits is left at 1 here; the caller fixes the run-wide packet length.
    """
    lam = model.lam
    n = shape.n_ports
    packets = []
    pid = start_id
    rand = rng.random
    for source in range(n):
        if rand() < lam:
            packets.append(
                Packet(
                    id=pid,
                    source=source,
                    destination=rng.randrange(n),
                    n_flits=1,
                    generated_cycle=cycle,
                )
            )
            pid += 1
    return packets


def binomial_first_stage_pmf(n: int, lam: float, k: int = 2) -> float:
    """Probability that ``n`` of the ``k`` feeder inputs generate a packet.

    bin(k, lam/k); zero outside 0..k.
    """
    if not 0.0 <= lam <= k:
        raise ConfigurationError(f"lambda must satisfy 0 <= lambda <= k={k}, got {lam}")
    if n < 0 or n > k:
        return 0.0
    p = lam / k
    return math.comb(k, n) * p**n * (1.0 - p) ** (k - n)


def flitize(packet: Packet) -> list[Flit]:
    """Split a packet into its ordered flit sequence (header first, tail last)."""
    n = packet.n_flits
    if n < 1:
        raise ConfigurationError(f"packet must have at least 1 flit, got {n}")
    return [
        Flit(
            packet_id=packet.id,
            seq=seq,
            is_head=seq == 0,
            is_tail=seq == n - 1,
            destination=packet.destination,
        )
        for seq in range(n)
    ]
