import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topoforge.csp import combine_metrics
from topoforge.errors import CapExceeded, NotInTree, Unreachable
from topoforge.graph import (
    Arc,
    Network,
    Node,
    Path,
    WeightVector,
    all_shortest_paths,
    lowest_common_ancestor,
    path_resource,
    route,
    route_for_demand,
    shortest_path_tree,
    validate_path,
)

from .bruteforce import brute_shortest_paths, random_network
from .conftest import make_net


class TestNetworkInvariants:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            make_net(2, [(0, 0)])

    def test_rejects_nonpositive_capacity(self):
        with pytest.raises(ValueError, match="capacity"):
            Network([Node(0, 0, 0), Node(1, 0, 1)], [Arc(0, 0, 1, 0.0)])

    def test_rejects_sparse_ids(self):
        with pytest.raises(ValueError, match="dense"):
            Network([Node(0, 0, 0), Node(2, 0, 1)], [])

    def test_parallel_arcs_allowed(self):
        net = make_net(2, [(0, 1), (0, 1)])
        assert net.n_arcs == 2

    def test_json_round_trip(self):
        net = make_net(3, [(0, 1), (1, 2)], caps=[40, 10])
        assert Network.from_json(net.to_json()) == net

    def test_reversed_preserves_arc_ids(self):
        net = make_net(3, [(0, 1), (1, 2)])
        rev = net.reversed()
        assert rev.arcs[0].tail == 1 and rev.arcs[0].head == 0
        assert rev.reversed() is net


class TestWeightVector:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            WeightVector([1, -1])

    def test_float_converted_exactly(self):
        w = WeightVector([0.5])
        assert w[0] == Fraction(1, 2)

    def test_integral_values_stay_int(self):
        w = WeightVector([Fraction(4, 2), 3])
        assert w[0] == 2 and isinstance(w[0], int)


class TestShortestPathTree:
    def test_line(self):
        net = make_net(3, [(0, 1), (1, 2)])
        tree = shortest_path_tree(net, WeightVector([2, 1]), 0)
        assert tree.dist == (0, 2, 3)

    def test_triangle_tree(self, triangle):
        tree = shortest_path_tree(triangle, WeightVector([2, 1, 5]), 0)
        assert tree.dist[2] == 3
        assert tree.tree_arc_ids() == {0, 1}

    def test_root_without_out_arcs(self):
        net = make_net(3, [(1, 0), (1, 2)])
        tree = shortest_path_tree(net, WeightVector([1, 1]), 0)
        assert tree.dist == (0, None, None)

    def test_parent_tie_break_smallest_arc_id(self):
        # two parallel arcs, same weight: parent must be arc 0
        net = make_net(2, [(0, 1), (0, 1)])
        tree = shortest_path_tree(net, WeightVector([4, 4]), 0)
        assert tree.parent_arc[1] == 0


class TestAllShortestPaths:
    def test_equal_branch_diamond(self):
        net = make_net(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
        paths = all_shortest_paths(net, WeightVector([1, 2, 2, 1]), 0, 3)
        assert [p.arcs for p in paths] == [(0, 1), (2, 3)]

    def test_triangle_unique(self, triangle):
        paths = all_shortest_paths(triangle, WeightVector([2, 1, 5]), 0, 2)
        assert len(paths) == 1 and paths[0].arcs == (0, 1)

    def test_cap_exceeded(self):
        net = make_net(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
        with pytest.raises(CapExceeded):
            all_shortest_paths(net, WeightVector([1, 2, 2, 1]), 0, 3, cap=1)

    def test_unreachable(self):
        net = make_net(3, [(0, 1)])
        with pytest.raises(Unreachable):
            all_shortest_paths(net, WeightVector([1]), 0, 2)


class TestRoute:
    def test_line(self):
        net = make_net(3, [(0, 1), (1, 2)])
        assert route(net, WeightVector([2, 1]), 0, 2).arcs == (0, 1)

    def test_triangle_min_weight(self, triangle):
        w = WeightVector([2, 1, 5])
        p = route(triangle, w, 0, 2)
        best, _ = brute_shortest_paths(triangle, w, 0, 2)
        assert path_resource(p, list(w)) == best == 3
        assert p.arcs == (0, 1)

    def test_tie_follows_documented_break(self, tri_lanes):
        net, ms, k0 = tri_lanes
        w = combine_metrics(ms, (1, Fraction(1, 5)))
        p1 = route(net, w, 1, 4)
        p2 = route(net, w, 1, 4)
        assert p1 == p2
        # lexicographically-first tied path under (dist, arc id)
        assert p1.arcs == (0, 1)
        assert route_for_demand(net, w, k0) == p1

    def test_unreachable(self):
        net = make_net(3, [(0, 1)])
        with pytest.raises(Unreachable):
            route(net, WeightVector([1]), 2, 0)


class TestLowestCommonAncestor:
    def test_identity(self, triangle):
        tree = shortest_path_tree(triangle, WeightVector([2, 1, 5]), 0)
        assert lowest_common_ancestor(tree, 1, 1) == 1

    def test_star_root(self):
        net = make_net(3, [(0, 1), (0, 2)])
        tree = shortest_path_tree(net, WeightVector([1, 1]), 0)
        assert lowest_common_ancestor(tree, 1, 2) == 0

    def test_chain(self):
        net = make_net(3, [(0, 1), (1, 2)])
        tree = shortest_path_tree(net, WeightVector([1, 1]), 0)
        assert lowest_common_ancestor(tree, 1, 2) == 1

    def test_not_in_tree(self):
        net = make_net(3, [(0, 1)])
        tree = shortest_path_tree(net, WeightVector([1]), 0)
        with pytest.raises(NotInTree):
            lowest_common_ancestor(tree, 1, 2)


class TestPathResource:
    def test_empty(self):
        assert path_resource(Path(0, 0, ()), [1, 2]) == 0

    def test_two_arcs(self):
        assert path_resource(Path(0, 2, (0, 1)), [1, 4]) == 5

    def test_diamond_lane(self, tri_lanes):
        net, ms, _ = tri_lanes
        assert path_resource(Path(1, 4, (0, 1)), ms.values[0]) == 2

    def test_validate_path(self, tri_lanes):
        net, _, _ = tri_lanes
        validate_path(net, Path(1, 4, (0, 1)))
        with pytest.raises(ValueError):
            validate_path(net, Path(1, 4, (1, 0)))


@st.composite
def small_graph_and_weights(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    seed = draw(st.integers(min_value=0, max_value=10**6))
    rng = random.Random(seed)
    net = random_network(rng, n, extra_arcs=draw(st.integers(0, 8)))
    w = WeightVector(
        [draw(st.integers(min_value=0, max_value=12)) for _ in range(net.n_arcs)]
    )
    return net, w


@settings(max_examples=60, deadline=None)
@given(small_graph_and_weights())
def test_bellman_conditions(case):
    net, w = case
    for root in range(net.n_nodes):
        tree = shortest_path_tree(net, w, root)
        assert tree.dist[root] == 0
        for arc in net.arcs:
            dt, dh = tree.dist[arc.tail], tree.dist[arc.head]
            if dt is None:
                continue
            assert dh is not None
            assert dt + w[arc.id] >= dh
            if tree.parent_arc[arc.head] == arc.id:
                assert dt + w[arc.id] == dh


@settings(max_examples=40, deadline=None)
@given(small_graph_and_weights())
def test_all_shortest_paths_match_enumeration(case):
    net, w = case
    tree = shortest_path_tree(net, w, 0)
    for dst in range(1, net.n_nodes):
        best, expected = brute_shortest_paths(net, w, 0, dst)
        if best is None:
            with pytest.raises(Unreachable):
                all_shortest_paths(net, w, 0, dst)
            continue
        got = all_shortest_paths(net, w, 0, dst, cap=100000)
        assert sorted(p.arcs for p in got) == sorted(p.arcs for p in expected)
        assert all(path_resource(p, list(w)) == best == tree.dist[dst] for p in got)


@settings(max_examples=30, deadline=None)
@given(small_graph_and_weights())
def test_route_is_minimum_weight_and_deterministic(case):
    net, w = case
    for dst in range(1, net.n_nodes):
        best, _ = brute_shortest_paths(net, w, 0, dst)
        if best is None:
            continue
        p = route(net, w, 0, dst)
        assert path_resource(p, list(w)) == best
        assert route(net, w, 0, dst) == p
        validate_path(net, p)
