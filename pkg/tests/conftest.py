import pytest

from topoforge.csp import Demand, MetricSet
from topoforge.graph import Arc, Network, Node


def make_net(n_nodes: int, arc_specs: list[tuple[int, int]], caps=None) -> Network:
    """Build a network from (tail, head) pairs; arc ids follow list order."""
    nodes = [Node(i, float(i), 0.0) for i in range(n_nodes)]
    arcs = [
        Arc(i, t, h, float(caps[i]) if caps else 1.0)
        for i, (t, h) in enumerate(arc_specs)
    ]
    return Network(nodes, arcs)


@pytest.fixture
def tri_lanes():
    """4-node network with a cheap-delay lane, a cheap-loss lane and a
    balanced direct arc; the canonical hand-checkable instance.

    Nodes 1..4 (node 0 is isolated padding so ids match the usual naming):
    arcs 0,1 form 1->2->4 with per-arc (delay 1, loss 10); arcs 2,3 form
    1->3->4 with (10, 1); arc 4 is 1->4 with (5, 5).
    """
    net = make_net(5, [(1, 2), (2, 4), (1, 3), (3, 4), (1, 4)])
    ms = MetricSet.create(
        ("delay", "loss"), [[1, 1, 10, 10, 5], [10, 10, 1, 1, 5]]
    )
    k0 = Demand.create(0, 1, 4, [9, 9])
    return net, ms, k0


@pytest.fixture
def triangle():
    """a->b (w=2), b->c (w=1), a->c (w=5); nodes a=0, b=1, c=2."""
    return make_net(3, [(0, 1), (1, 2), (0, 2)])
