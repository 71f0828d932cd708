"""Multi-lane wormhole interconnection fabric: flit-level simulator and analytic models."""

from .config import SimConfig
from .engine import Simulation, run
from .errors import ConfigurationError, SimulationError
from .metrics import MetricsRecord, aggregate_replications
from .topology import NetworkShape, build_shape, routing_tag

__all__ = [
    "SimConfig",
    "Simulation",
    "run",
    "ConfigurationError",
    "SimulationError",
    "MetricsRecord",
    "aggregate_replications",
    "NetworkShape",
    "build_shape",
    "routing_tag",
]

__version__ = "0.1.0"
