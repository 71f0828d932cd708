"""Delta network geometry: stage/switch indexing, destination-tag routing, wiring.

The fabric is an N x N banyan built from 2x2 switch elements (SEs) in
L = log2(N) stages, wired as a butterfly: the SE pair at stage ``s``
groups the two link positions that differ in bit ``L-1-s``, so the output
port chosen at stage ``s`` writes that bit of the current link address.
Consuming the destination bits most-significant-first therefore steers a
header from any source to exactly its tagged output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError

SE_DEGREE = 2  # 2x2 switch elements throughout

MAX_RADIX = 20


@dataclass(frozen=True)
class NetworkShape:
    """Dimensions of one fabric: ``radix`` stages of N/2 switch elements."""

    radix: int
    n_ports: int
    ses_per_stage: int

    @property
    def total_ses(self) -> int:
        return self.ses_per_stage * self.radix


@dataclass(frozen=True)
class PortAddress:
    """Location of one SE port: (stage, switch, input/output side, port bit)."""

    stage: int
    se_index: int
    side: str  # "input" | "output"
    port: int

    def __post_init__(self) -> None:
        if self.side not in ("input", "output"):
            raise ConfigurationError(f"side must be 'input' or 'output', got {self.side!r}")
        if self.port not in (0, 1):
            raise ConfigurationError(f"port must be 0 or 1, got {self.port}")
        if self.stage < 0 or self.se_index < 0:
            raise ConfigurationError("stage and se_index must be nonnegative")

    def in_bounds(self, shape: NetworkShape) -> bool:
        return self.stage < shape.radix and self.se_index < shape.ses_per_stage


@dataclass(frozen=True)
class RoutingTag:
    """Destination address as port-select bits, most-significant first.

    Bit i picks the output port at stage i (0 = upper, 1 = lower).
    """

    destination: int
    bits: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.bits and int("".join(map(str, self.bits)), 2) != self.destination:
            raise ConfigurationError(
                f"tag bits {self.bits} are not the binary expansion of {self.destination}"
            )


def build_shape(radix: int) -> NetworkShape:
    """Shape of a fabric with ``radix`` stages (N = 2**radix ports)."""
    if not isinstance(radix, int) or not 1 <= radix <= MAX_RADIX:
        raise ConfigurationError(f"radix must be an integer in 1..{MAX_RADIX}, got {radix!r}")
    n = 1 << radix
    return NetworkShape(radix=radix, n_ports=n, ses_per_stage=n // 2)


def routing_tag(destination: int, shape: NetworkShape) -> RoutingTag:
    """Port-select bits for ``destination``, one bit per stage, MSB first."""
    if not 0 <= destination < shape.n_ports:
        raise ConfigurationError(
            f"destination {destination} outside 0..{shape.n_ports - 1}"
        )
    l = shape.radix
    bits = tuple((destination >> (l - 1 - i)) & 1 for i in range(l))
    return RoutingTag(destination=destination, bits=bits)


def tag_bit(destination: int, stage: int, radix: int) -> int:
    """Output port selected at ``stage`` en route to ``destination``."""
    return (destination >> (radix - 1 - stage)) & 1


def _split_wire(wire: int, bit: int) -> tuple[int, int]:
    # SE index = wire with position `bit` removed; port = that bit's value.
    se = ((wire >> (bit + 1)) << bit) | (wire & ((1 << bit) - 1))
    return se, (wire >> bit) & 1


def _join_wire(se: int, bit: int, value: int) -> int:
    return ((se >> bit) << (bit + 1)) | (value << bit) | (se & ((1 << bit) - 1))


def source_port(source: int, shape: NetworkShape) -> tuple[int, int]:
    """Stage-0 (se_index, in_port) fed by input ``source``."""
    if not 0 <= source < shape.n_ports:
        raise ConfigurationError(f"source {source} outside 0..{shape.n_ports - 1}")
    return _split_wire(source, shape.radix - 1)


def sink_index(se_index: int, out_port: int, shape: NetworkShape) -> int:
    """Output terminal reached from last-stage SE ``se_index`` port ``out_port``."""
    return _join_wire(se_index, 0, out_port)


def next_hop(stage: int, se_index: int, out_port: int, shape: NetworkShape) -> tuple[int, int]:
    """Downstream (se_index, in_port) at ``stage + 1``.

    Raises ConfigurationError at the last stage: those ports exit to sinks
    (see sink_index).
    """
    l = shape.radix
    if stage >= l - 1:
        raise ConfigurationError(f"stage {stage} has no next hop (last stage is {l - 1})")
    if not 0 <= se_index < shape.ses_per_stage or out_port not in (0, 1):
        raise ConfigurationError(f"bad port (stage={stage}, se={se_index}, out={out_port})")
    wire = _join_wire(se_index, l - 1 - stage, out_port)
    return _split_wire(wire, l - 2 - stage)


def trace_path(source: int, destination: int, shape: NetworkShape) -> list[tuple[int, int, int]]:
    """(stage, se_index, in_port) sequence a header visits from source to sink."""
    tag = routing_tag(destination, shape)
    se, port = source_port(source, shape)
    path = [(0, se, port)]
    for stage in range(shape.radix - 1):
        se, port = next_hop(stage, se, tag.bits[stage], shape)
        path.append((stage + 1, se, port))
    return path
