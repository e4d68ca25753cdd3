"""topoforge: weight design for multi-topology IGP routing.

Real topologies are designed by a greedy local search over OSPF link
weights; virtual topologies are Lagrangian-multiplier combinations of two
base QoS metrics, chosen by an exact interval-cover algorithm.
"""

from .csp import Demand, LaracResult, MetricSet, exact_csp, lambda_shortest, larac, tamcra
from .errors import (
    BudgetTooSmall,
    CapExceeded,
    ConvergenceError,
    Disconnected,
    InfeasibleDemand,
    InvalidKappa,
    InvalidPlan,
    MissingCapacity,
    MissingCoordinates,
    NotInTree,
    ParseError,
    TopoforgeError,
    Unreachable,
)
from .graph import (
    Arc,
    Network,
    Node,
    Path,
    SPTree,
    WeightVector,
    all_shortest_paths,
    lowest_common_ancestor,
    path_resource,
    route,
    route_for_demand,
    shortest_path_tree,
)

__version__ = "0.1.0"
