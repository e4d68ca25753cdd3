"""Independent oracles used to pin expected values.

Everything here is deliberately naive: exhaustive DFS enumeration and
subset search, with no shared code paths with the package internals beyond
the data types.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from topoforge.csp import Demand, MetricSet
from topoforge.graph import Arc, Network, Node, Path, WeightVector


def all_simple_paths(net: Network, src: int, dst: int) -> list[Path]:
    """Every simple src->dst path, DFS in increasing arc-id order."""
    paths: list[Path] = []
    prefix: list[int] = []
    seen = {src}

    def dfs(u: int) -> None:
        if u == dst:
            paths.append(Path(src, dst, tuple(prefix)))
            return
        for arc in net.out_arcs[u]:
            if arc.head in seen:
                continue
            seen.add(arc.head)
            prefix.append(arc.id)
            dfs(arc.head)
            prefix.pop()
            seen.discard(arc.head)

    if src != dst:
        dfs(src)
    else:
        paths.append(Path(src, dst, ()))
    return paths


def path_weight(path: Path, w) -> object:
    total = 0
    for a in path.arcs:
        total = total + w[a]
    return total


def brute_shortest_paths(net: Network, w: WeightVector, src: int, dst: int):
    """(min weight, all minimum-weight simple paths) or (None, [])."""
    paths = all_simple_paths(net, src, dst)
    if not paths:
        return None, []
    weights = [path_weight(p, w) for p in paths]
    best = min(weights)
    return best, [p for p, pw in zip(paths, weights) if pw == best]

def brute_exact_csp(net: Network, ms: MetricSet, k: Demand):
    """Feasible path minimizing (metric0, metric1, ..., arcs); None if none."""
    feasible = []
    for p in all_simple_paths(net, k.src, k.dst):
        costs = tuple(path_weight(p, ms.values[i]) for i in range(ms.n_metrics))
        if all(c <= b for c, b in zip(costs, k.bounds)):
            feasible.append((costs, p.arcs, p))
    if not feasible:
        return None
    return min(feasible, key=lambda t: (t[0], t[1]))[2]


def brute_min_stab(intervals: list[tuple[Fraction, Fraction | None]]) -> int:
    """Minimum number of points stabbing every interval, by subset search
    over the candidate endpoint set (coverage tested via bitmasks)."""
    if not intervals:
        return 0
    candidates: list[Fraction] = []
    for lo, hi in intervals:
        candidates.append(lo)
        if hi is not None:
            candidates.append(hi)
    candidates = sorted(set(candidates))
    masks = []
    for p in candidates:
        mask = 0
        for i, (lo, hi) in enumerate(intervals):
            if lo <= p and (hi is None or p <= hi):
                mask |= 1 << i
        masks.append(mask)
    full = (1 << len(intervals)) - 1

    for size in range(1, len(intervals) + 1):
        for chosen in itertools.combinations(masks, size):
            acc = 0
            for m in chosen:
                acc |= m
            if acc == full:
                return size
    return len(intervals)


def random_network(rng: random.Random, n_nodes: int, extra_arcs: int) -> Network:
    """Connected-ish random digraph: a random spanning arborescence out of
    node 0 plus extra random arcs (no self-loops, parallels allowed)."""
    nodes = [Node(i, rng.random(), rng.random()) for i in range(n_nodes)]
    specs: list[tuple[int, int]] = []
    order = list(range(1, n_nodes))
    rng.shuffle(order)
    placed = [0]
    for v in order:
        specs.append((rng.choice(placed), v))
        placed.append(v)
    for _ in range(extra_arcs):
        t = rng.randrange(n_nodes)
        h = rng.randrange(n_nodes)
        if t != h:
            specs.append((t, h))
    arcs = [
        Arc(i, t, h, float(rng.choice((10, 40, 100))))
        for i, (t, h) in enumerate(specs)
    ]
    return Network(nodes, arcs)


def random_metrics(rng: random.Random, net: Network, hi: int = 20) -> MetricSet:
    return MetricSet.create(
        ("delay", "loss"),
        [
            [rng.randint(1, hi) for _ in range(net.n_arcs)],
            [rng.randint(1, hi) for _ in range(net.n_arcs)],
        ],
    )


def random_weights(rng: random.Random, net: Network, hi: int = 50) -> WeightVector:
    return WeightVector([rng.randint(1, hi) for _ in range(net.n_arcs)])
