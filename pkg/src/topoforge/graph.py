"""Deterministic graph primitives: shortest-path trees, equal-cost path
enumeration, hop-by-hop routes, LCA queries and path resource sums.

Determinism contract: Dijkstra pops by ``(distance, node id)`` and, among
equal-distance parents seen before a node settles, keeps the smallest arc id.
Repeated runs on identical inputs are bit-identical. Parents always settle
strictly earlier in the pop order than their children, so the tree stays
acyclic even with zero-weight arcs.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import CapExceeded, NotInTree, Unreachable
from .rational import Number, exact

OSPF_WEIGHT_MAX = 65535
DEFAULT_PATH_CAP = 1000


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    capacity: float


class Network:
    """Directed graph with dense node/arc ids and positive capacities.

    Self-loops are rejected; parallel arcs are allowed. Instances are
    immutable after construction and safe to share across threads.
    """

    __slots__ = ("nodes", "arcs", "out_arcs", "in_arcs", "_rev")

    def __init__(self, nodes: Sequence[Node], arcs: Sequence[Arc]):
        nodes = tuple(nodes)
        arcs = tuple(arcs)
        for i, node in enumerate(nodes):
            if node.id != i:
                raise ValueError(f"node ids must be dense 0..n-1, got {node.id} at {i}")
        n = len(nodes)
        for j, arc in enumerate(arcs):
            if arc.id != j:
                raise ValueError(f"arc ids must be dense 0..m-1, got {arc.id} at {j}")
            if arc.tail == arc.head:
                raise ValueError(f"arc {j} is a self-loop at node {arc.tail}")
            if not (0 <= arc.tail < n and 0 <= arc.head < n):
                raise ValueError(f"arc {j} references unknown nodes")
            if not arc.capacity > 0:
                raise ValueError(f"arc {j} has non-positive capacity {arc.capacity}")
        self.nodes = nodes
        self.arcs = arcs
        out: list[list[Arc]] = [[] for _ in range(n)]
        inc: list[list[Arc]] = [[] for _ in range(n)]
        for arc in arcs:
            out[arc.tail].append(arc)
            inc[arc.head].append(arc)
        self.out_arcs = tuple(tuple(a) for a in out)
        self.in_arcs = tuple(tuple(a) for a in inc)
        self._rev: Network | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def reversed(self) -> "Network":
        """Network with every arc flipped; arc ids are preserved."""
        if self._rev is None:
            flipped = [Arc(a.id, a.head, a.tail, a.capacity) for a in self.arcs]
            rev = Network(self.nodes, flipped)
            rev._rev = self
            self._rev = rev
        return self._rev

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Network)
            and self.nodes == other.nodes
            and self.arcs == other.arcs
        )

    def __hash__(self):
        return hash((self.nodes, self.arcs))

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "x": n.x, "y": n.y} for n in self.nodes],
            "arcs": [
                {"id": a.id, "tail": a.tail, "head": a.head, "capacity": a.capacity}
                for a in self.arcs
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        nodes = [Node(d["id"], float(d["x"]), float(d["y"])) for d in data["nodes"]]
        arcs = [
            Arc(d["id"], d["tail"], d["head"], float(d["capacity"]))
            for d in data["arcs"]
        ]
        return cls(nodes, arcs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Network":
        return cls.from_dict(json.loads(text))


class WeightVector:
    """Per-arc nonnegative exact weights.

    Entries are ``int`` or ``Fraction``; floats are converted exactly on
    construction. MTR design keeps entries within ``[0, 65535]`` but the
    type itself only enforces nonnegativity (virtual weights may exceed
    the OSPF range).
    """

    __slots__ = ("values",)

    def __init__(self, values: Iterable):
        vals = tuple(exact(v) for v in values)
        for i, v in enumerate(vals):
            if v < 0:
                raise ValueError(f"weight {i} is negative: {v}")
        self.values = vals

    def __getitem__(self, arc_id: int) -> Number:
        return self.values[arc_id]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, WeightVector) and self.values == other.values

    def __hash__(self):
        return hash(self.values)

    def __repr__(self):
        return f"WeightVector({list(self.values)!r})"

    def replace(self, arc_id: int, value) -> "WeightVector":
        vals = list(self.values)
        vals[arc_id] = value
        return WeightVector(vals)


@dataclass(frozen=True)
class SPTree:
    """Rooted shortest-path tree with exact distances.

    ``dist[v] is None`` marks an unreachable node. ``parent_arc[v]`` /
    ``parent_node[v]`` give the unique tree arc into ``v`` (``None`` at the
    root and at unreachable nodes).
    """

    root: int
    parent_arc: tuple[int | None, ...]
    parent_node: tuple[int | None, ...]
    dist: tuple[Number | None, ...]

    def reachable(self, v: int) -> bool:
        return 0 <= v < len(self.dist) and self.dist[v] is not None

    def depth(self, v: int) -> int:
        if not self.reachable(v):
            raise NotInTree(f"node {v} is not reachable from root {self.root}")
        d = 0
        while v != self.root:
            v = self.parent_node[v]
            d += 1
        return d

    def arcs_between(self, ancestor: int, descendant: int) -> list[int]:
        """Tree arcs on the path from ``ancestor`` down to ``descendant``."""
        if not self.reachable(ancestor) or not self.reachable(descendant):
            raise NotInTree("endpoint not reachable in tree")
        arcs: list[int] = []
        v = descendant
        while v != ancestor:
            arc = self.parent_arc[v]
            if arc is None:
                raise NotInTree(f"{ancestor} is not an ancestor of {descendant}")
            arcs.append(arc)
            v = self.parent_node[v]
        arcs.reverse()
        return arcs

    def tree_arc_ids(self) -> frozenset[int]:
        return frozenset(a for a in self.parent_arc if a is not None)


@dataclass(frozen=True)
class Path:
    """Ordered arc ids from ``src`` to ``dst``; empty iff ``src == dst``."""

    src: int
    dst: int
    arcs: tuple[int, ...]

    def node_sequence(self, net: Network) -> list[int]:
        seq = [self.src]
        for a in self.arcs:
            seq.append(net.arcs[a].head)
        return seq


def validate_path(net: Network, path: Path) -> None:
    """Raise ``ValueError`` unless arcs chain src->dst without node repeats."""
    at = path.src
    seen = {at}
    for a in path.arcs:
        arc = net.arcs[a]
        if arc.tail != at:
            raise ValueError(f"arc {a} does not chain at node {at}")
        at = arc.head
        if at in seen:
            raise ValueError(f"path revisits node {at}")
        seen.add(at)
    if at != path.dst:
        raise ValueError(f"path ends at {at}, expected {path.dst}")


def shortest_path_tree(net: Network, w: WeightVector, root: int) -> SPTree:
    """Dijkstra tree rooted at ``root`` under weights ``w``.

    Unreachable nodes get ``dist=None`` and no parent. Ties are resolved by
    the documented ``(distance, node id)`` pop order with smallest-arc-id
    parents, so repeated runs are bit-identical.
    """
    n = net.n_nodes
    dist: list[Number | None] = [None] * n
    parent_arc: list[int | None] = [None] * n
    parent_node: list[int | None] = [None] * n
    settled = [False] * n
    dist[root] = 0
    heap: list[tuple[Number, int]] = [(0, root)]
    while heap:
        d, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = True
        for arc in net.out_arcs[u]:
            v = arc.head
            if settled[v]:
                continue
            nd = d + w[arc.id]
            dv = dist[v]
            if dv is None or nd < dv:
                dist[v] = nd
                parent_arc[v] = arc.id
                parent_node[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dv and arc.id < parent_arc[v]:
                parent_arc[v] = arc.id
                parent_node[v] = u
    return SPTree(root, tuple(parent_arc), tuple(parent_node), tuple(dist))


def all_shortest_paths(
    net: Network,
    w: WeightVector,
    src: int,
    dst: int,
    cap: int = DEFAULT_PATH_CAP,
) -> list[Path]:
    """Every minimum-weight simple path from src to dst, in lexicographic
    arc-id order.

    Raises ``Unreachable`` when no path exists and ``CapExceeded`` as soon
    as more than ``cap`` paths are found (never silently truncates).
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if src == dst:
        return [Path(src, dst, ())]
    tree = shortest_path_tree(net, w, src)
    if tree.dist[dst] is None:
        raise Unreachable(f"no path from {src} to {dst}")
    dist = tree.dist

    # Arcs lying on some shortest path form a DAG (plus zero-weight cycles,
    # which the simple-path DFS below cannot traverse).
    tight: list[list[Arc]] = [[] for _ in range(net.n_nodes)]
    for arc in net.arcs:
        dt, dh = dist[arc.tail], dist[arc.head]
        if dt is not None and dh is not None and dt + w[arc.id] == dh:
            tight[arc.tail].append(arc)

    # Restrict to arcs that can still reach dst so every DFS branch yields
    # a full path and the cap check is exact.
    reaches = [False] * net.n_nodes
    reaches[dst] = True
    stack = [dst]
    rev_tight: list[list[int]] = [[] for _ in range(net.n_nodes)]
    for u, arcs in enumerate(tight):
        for arc in arcs:
            rev_tight[arc.head].append(u)
    while stack:
        v = stack.pop()
        for u in rev_tight[v]:
            if not reaches[u]:
                reaches[u] = True
                stack.append(u)

    paths: list[Path] = []
    prefix: list[int] = []
    on_path = {src}

    def dfs(u: int) -> None:
        if u == dst:
            if len(paths) >= cap:
                raise CapExceeded(
                    f"more than {cap} equal-cost paths from {src} to {dst}"
                )
            paths.append(Path(src, dst, tuple(prefix)))
            return
        for arc in tight[u]:
            v = arc.head
            if v in on_path or not reaches[v]:
                continue
            prefix.append(arc.id)
            on_path.add(v)
            dfs(v)
            on_path.discard(v)
            prefix.pop()

    dfs(src)
    if not paths:
        # Possible only if every tight continuation was blocked by a
        # zero-weight cycle, which cannot happen for a reachable dst.
        raise Unreachable(f"no simple shortest path from {src} to {dst}")
    return paths


def route(net: Network, w: WeightVector, src: int, dst: int) -> Path:
    """Hop-by-hop route from src to dst: follow, from src, the next hops of
    the destination-rooted tree computed on the reversed graph.

    The result is a minimum-weight path and matches what per-destination
    forwarding tables would produce under the documented tie-break.
    """
    if src == dst:
        return Path(src, dst, ())
    tree = shortest_path_tree(net.reversed(), w, dst)
    if tree.dist[src] is None:
        raise Unreachable(f"no path from {src} to {dst}")
    arcs: list[int] = []
    at = src
    while at != dst:
        arc_id = tree.parent_arc[at]
        arcs.append(arc_id)
        at = net.arcs[arc_id].head
    return Path(src, dst, tuple(arcs))


def route_for_demand(net: Network, w: WeightVector, demand) -> Path:
    """Route for any object with ``src``/``dst`` attributes."""
    return route(net, w, demand.src, demand.dst)


def lowest_common_ancestor(tree: SPTree, u: int, v: int) -> int:
    """Deepest node that is an ancestor of both u and v in the tree."""
    if not tree.reachable(u) or not tree.reachable(v):
        raise NotInTree(f"nodes {u}, {v} must both be reachable in the tree")
    du, dv = tree.depth(u), tree.depth(v)
    while du > dv:
        u = tree.parent_node[u]
        du -= 1
    while dv > du:
        v = tree.parent_node[v]
        dv -= 1
    while u != v:
        u = tree.parent_node[u]
        v = tree.parent_node[v]
    return u


def path_resource(path: Path, metric: Sequence[Number]) -> Number:
    """Sum of a per-arc metric over the path's arcs (0 for an empty path)."""
    total: Number = 0
    for a in path.arcs:
        total = total + metric[a]
    return total
