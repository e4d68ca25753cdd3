import json
import random

import pytest

from topoforge.csp import Demand, MetricSet, combine_metrics, exact_csp
from topoforge.errors import InfeasibleDemand
from topoforge.graph import (
    Path,
    WeightVector,
    path_resource,
    route,
    shortest_path_tree,
)
from topoforge.mtr import (
    DeltaWeights,
    SearchConfig,
    accepted_demands,
    compute_delta_weights,
    generate_neighborhood,
    greedy_mtr,
    local_search,
    plan_to_dict,
    seed_from_path,
)

from .bruteforce import all_simple_paths, random_network, random_weights
from .conftest import make_net


def tree_profiles(net, w):
    """Per-root tree arc sets, the recomputation oracle for delta soundness."""
    return [
        shortest_path_tree(net, w, root).tree_arc_ids()
        for root in range(net.n_nodes)
    ]


class TestAcceptedDemands:
    def test_delay_weights_reject(self, tri_lanes):
        net, ms, k0 = tri_lanes
        assert accepted_demands(net, ms, ms.weight_vector(0), [k0]) == set()

    def test_combined_weights_accept(self, tri_lanes):
        net, ms, k0 = tri_lanes
        w = combine_metrics(ms, (1, 1))
        assert accepted_demands(net, ms, w, [k0]) == {0}

    def test_empty(self, tri_lanes):
        net, ms, _ = tri_lanes
        assert accepted_demands(net, ms, ms.weight_vector(0), []) == set()

    def test_unreachable_excluded(self, tri_lanes):
        net, ms, _ = tri_lanes
        ghost = Demand.create(9, 4, 1, [100, 100])
        assert accepted_demands(net, ms, ms.weight_vector(0), [ghost]) == set()


class TestComputeDeltaWeights:
    def test_triangle(self, triangle):
        d = compute_delta_weights(triangle, WeightVector([2, 1, 5]))
        assert d.down[2] == 2
        assert d.up[0] == 2 and d.up[1] == 2
        assert d.down[0] is None and d.down[1] is None and d.up[2] is None

    def test_single_path_all_infinite(self):
        net = make_net(3, [(0, 1), (1, 2)])
        d = compute_delta_weights(net, WeightVector([3, 4]))
        assert all(x is None for x in d.down + d.up)

    def test_bidirectional_diamond_zero_slack(self):
        # 0<->1<->3 and 0<->2<->3, all weight 1: non-tree arcs tie exactly
        net = make_net(
            4,
            [(0, 1), (1, 0), (1, 3), (3, 1), (0, 2), (2, 0), (2, 3), (3, 2)],
        )
        w = WeightVector([1] * 8)
        d = compute_delta_weights(net, w)
        # from root 0 the 2->3 arc ties against the chosen 1->3 parent
        assert d.down[6] == 0
        # and symmetrically from root 3, 2->0 ties against 1->0
        assert d.down[5] == 0

    def test_soundness_by_recomputation(self):
        rng = random.Random(5150)
        for _ in range(25):
            net = random_network(rng, rng.randint(3, 8), rng.randint(2, 10))
            w = random_weights(rng, net)
            deltas = compute_delta_weights(net, w)
            base = tree_profiles(net, w)
            for arc_id in range(net.n_arcs):
                down = deltas.down[arc_id]
                if down is not None:
                    if w[arc_id] - down - 1 >= 0:
                        changed = tree_profiles(
                            net, w.replace(arc_id, w[arc_id] - down - 1)
                        )
                        assert changed != base
                    if down >= 1 and w[arc_id] - (down - 1) >= 0:
                        same = tree_profiles(
                            net, w.replace(arc_id, w[arc_id] - (down - 1))
                        )
                        assert same == base
                up = deltas.up[arc_id]
                if up is not None:
                    changed = tree_profiles(
                        net, w.replace(arc_id, w[arc_id] + up + 1)
                    )
                    assert changed != base
                    if up >= 1:
                        same = tree_profiles(
                            net, w.replace(arc_id, w[arc_id] + (up - 1))
                        )
                        assert same == base

    def test_distances_stable_for_nowhere_tree_arcs(self):
        rng = random.Random(99)
        for _ in range(10):
            net = random_network(rng, rng.randint(3, 6), rng.randint(2, 6))
            w = random_weights(rng, net)
            deltas = compute_delta_weights(net, w)
            trees = [shortest_path_tree(net, w, r) for r in range(net.n_nodes)]
            in_some_tree = set().union(*(t.tree_arc_ids() for t in trees))
            for arc_id in range(net.n_arcs):
                down = deltas.down[arc_id]
                if down is None or down < 1 or arc_id in in_some_tree:
                    continue
                if w[arc_id] - (down - 1) < 0:
                    continue
                perturbed = w.replace(arc_id, w[arc_id] - (down - 1))
                for r, t in enumerate(trees):
                    assert shortest_path_tree(net, perturbed, r).dist == t.dist


class TestGenerateNeighborhood:
    def test_triangle_inserts_arc(self, triangle):
        w = WeightVector([2, 1, 5])
        deltas = compute_delta_weights(triangle, w)
        cfg = SearchConfig()
        nbrs = generate_neighborhood(triangle, w, deltas, cfg)
        lowered = [n for n in nbrs if n[2] == 2]
        assert lowered
        # and the insertion actually changes the root-0 tree
        tree = shortest_path_tree(triangle, lowered[0], 0)
        assert 2 in tree.tree_arc_ids()

    def test_all_infinite_empty(self):
        net = make_net(3, [(0, 1), (1, 2)])
        w = WeightVector([3, 4])
        assert generate_neighborhood(
            net, w, compute_delta_weights(net, w), SearchConfig()
        ) == []

    def test_clamp_drops_identical(self):
        deltas = DeltaWeights(up=(None,), down=(3,))
        net = make_net(2, [(0, 1)])
        nbrs = generate_neighborhood(net, WeightVector([0]), deltas, SearchConfig())
        assert nbrs == []

    def test_literal_mode_adds_threshold(self, triangle):
        w = WeightVector([2, 1, 5])
        deltas = compute_delta_weights(triangle, w)
        cfg = SearchConfig(literal_down_neighbors=True)
        nbrs = generate_neighborhood(triangle, w, deltas, cfg)
        assert any(n[2] == 7 for n in nbrs)  # w + delta, no tree change


class TestLocalSearch:
    def test_already_perfect_returns_equivalent(self, tri_lanes):
        net, ms, k0 = tri_lanes
        w0 = combine_metrics(ms, (1, 1))
        w = local_search(net, ms, w0, [k0], SearchConfig(max_iterations=3))
        assert accepted_demands(net, ms, w, [k0]) == {0}

    def test_finds_single_down_move(self, tri_lanes):
        net, ms, k0 = tri_lanes
        w = local_search(net, ms, ms.weight_vector(0), [k0], SearchConfig())
        assert accepted_demands(net, ms, w, [k0]) == {0}

    def test_empty_neighborhood_returns_start(self):
        net = make_net(3, [(0, 1), (1, 2)])
        ms = MetricSet.create(("delay", "loss"), [[1, 1], [1, 1]])
        k = Demand.create(0, 0, 2, [10, 10])
        w0 = WeightVector([3, 4])
        assert local_search(net, ms, w0, [k], SearchConfig()) == w0

    def test_monotonicity(self):
        rng = random.Random(31)
        for _ in range(5):
            net = random_network(rng, 6, 8)
            from .bruteforce import random_metrics

            ms = random_metrics(rng, net)
            demands = []
            for i in range(4):
                dst = rng.randrange(1, net.n_nodes)
                paths = all_simple_paths(net, 0, dst)
                if not paths:
                    continue
                ref = paths[rng.randrange(len(paths))]
                demands.append(
                    Demand.create(
                        i, 0, dst,
                        [path_resource(ref, ms.values[0]),
                         path_resource(ref, ms.values[1])],
                    )
                )
            if not demands:
                continue
            w0 = random_weights(rng, net)
            w = local_search(net, ms, w0, demands, SearchConfig(max_iterations=5))
            assert len(accepted_demands(net, ms, w, demands)) >= len(
                accepted_demands(net, ms, w0, demands)
            )


class TestSeedFromPath:
    def test_canonical_direct(self, tri_lanes):
        net, ms, k0 = tri_lanes
        w = seed_from_path(net, Path(1, 4, (4,)))
        assert list(w) == [65535, 65535, 65535, 65535, 1]
        assert route(net, w, 1, 4).arcs == (4,)

    def test_single_arc(self):
        net = make_net(2, [(0, 1)])
        assert list(seed_from_path(net, Path(0, 1, (0,)))) == [1]

    def test_two_arc_lane(self, tri_lanes):
        net, _, _ = tri_lanes
        w = seed_from_path(net, Path(1, 4, (0, 1)))
        assert route(net, w, 1, 4).arcs == (0, 1)


class TestGreedyMtr:
    def test_empty(self, tri_lanes):
        net, ms, _ = tri_lanes
        assert greedy_mtr(net, ms, [], SearchConfig()) == []

    def test_single_demand(self, tri_lanes):
        net, ms, k0 = tri_lanes
        plan = greedy_mtr(net, ms, [k0], SearchConfig(rng_seed=4))
        assert len(plan) == 1 and plan[0].assigned == {0}

    def test_pairwise_incompatible_demands_need_own_topologies(self):
        # three parallel 2-arc lanes; each demand fits exactly one lane
        net = make_net(5, [(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)])
        ms = MetricSet.create(
            ("delay", "loss"),
            [[1, 1, 100, 100, 10, 10], [100, 100, 1, 1, 10, 10]],
        )
        demands = [
            Demand.create(0, 0, 4, [2, 220]),
            Demand.create(1, 0, 4, [220, 2]),
            Demand.create(2, 0, 4, [20, 20]),
        ]
        # brute-check pairwise incompatibility: no single path fits two
        paths = all_simple_paths(net, 0, 4)
        for i in range(3):
            for j in range(i + 1, 3):
                for p in paths:
                    fits_i = all(
                        path_resource(p, ms.values[m]) <= demands[i].bounds[m]
                        for m in range(2)
                    )
                    fits_j = all(
                        path_resource(p, ms.values[m]) <= demands[j].bounds[m]
                        for m in range(2)
                    )
                    assert not (fits_i and fits_j)
        plan = greedy_mtr(net, ms, demands, SearchConfig(rng_seed=11))
        assert len(plan) == 3

    def test_totality_disjoint_and_verified(self, tri_lanes):
        net, ms, _ = tri_lanes
        demands = [
            Demand.create(0, 1, 4, [9, 9]),
            Demand.create(1, 1, 4, [2, 25]),
            Demand.create(2, 1, 2, [5, 15]),
        ]
        plan = greedy_mtr(net, ms, demands, SearchConfig(rng_seed=2))
        assigned: set[int] = set()
        for topo in plan:
            assert not (topo.assigned & assigned)
            assigned |= topo.assigned
            recheck = accepted_demands(
                net, ms, topo.weights, [k for k in demands if k.id in topo.assigned]
            )
            assert recheck == topo.assigned
        assert assigned == {0, 1, 2}
        assert len(plan) <= len(demands)

    def test_reproducible(self, tri_lanes):
        net, ms, k0 = tri_lanes
        demands = [k0, Demand.create(1, 1, 4, [2, 25])]
        a = greedy_mtr(net, ms, demands, SearchConfig(rng_seed=9))
        b = greedy_mtr(net, ms, demands, SearchConfig(rng_seed=9))
        assert json.dumps(plan_to_dict(a)) == json.dumps(plan_to_dict(b))

    def test_infeasible_demand_raises(self, tri_lanes):
        net, ms, _ = tri_lanes
        bad = Demand.create(0, 1, 4, [1, 1])
        assert exact_csp(net, ms, bad) is None
        with pytest.raises(InfeasibleDemand):
            greedy_mtr(net, ms, [bad], SearchConfig())

    def test_literal_fallback_mode_still_terminates(self, tri_lanes):
        # random off-path weights instead of the pinned 65535: the designer
        # retries whole rounds until the fallback demand is accepted
        net, ms, k0 = tri_lanes
        cfg = SearchConfig(rng_seed=6, literal_fallback=True, max_iterations=2)
        plan = greedy_mtr(net, ms, [k0], cfg)
        assert {kid for t in plan for kid in t.assigned} == {0}

    def test_threads_do_not_change_plan(self, tri_lanes, monkeypatch):
        net, ms, _ = tri_lanes
        demands = [
            Demand.create(0, 1, 4, [9, 9]),
            Demand.create(1, 1, 4, [2, 25]),
        ]
        monkeypatch.setenv("TOPOFORGE_THREADS", "1")
        a = greedy_mtr(net, ms, demands, SearchConfig(rng_seed=3))
        monkeypatch.setenv("TOPOFORGE_THREADS", "8")
        b = greedy_mtr(net, ms, demands, SearchConfig(rng_seed=3))
        assert json.dumps(plan_to_dict(a)) == json.dumps(plan_to_dict(b))
