"""Topological speed limits: transport distances on graphs and the flows that realise them."""

from .dynamics import (
    BoundReport,
    FlowField,
    FlowTrajectory,
    discretized_transport_check,
    evolve,
    observable_bound,
    speed_limit_report,
    velocity,
)
from .errors import ConfigError, InvariantViolation, NumericFailure, ScenarioError, ToposlError
from .graph import Graph, chain, complete, cycle, max_degree, shortest_path_matrix, star
from .transport import (
    distance,
    generalized_wasserstein,
    kantorovich_dual,
    total_variation,
    wasserstein1,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "ConfigError", "FlowField", "FlowTrajectory", "Graph", "InvariantViolation",
    "NumericFailure", "ScenarioError", "ToposlError", "chain", "complete", "cycle",
    "discretized_transport_check", "distance", "evolve", "generalized_wasserstein",
    "kantorovich_dual", "max_degree", "observable_bound", "shortest_path_matrix",
    "speed_limit_report", "star", "total_variation", "velocity", "wasserstein1",
]
