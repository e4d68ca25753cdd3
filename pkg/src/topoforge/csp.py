"""Constrained shortest path solvers.

Three routes to a QoS-feasible path:

* :func:`exact_csp` — exact Pareto label-correcting search with dominance
  pruning; the oracle everything else is checked against.
* :func:`larac` — Lagrangian relaxation with exact rational arithmetic;
  produces the dual-optimal multiplier used by the virtual-topology design.
* :func:`tamcra` — k-path heuristic under the nonlinear max-of-ratios
  length, used as the MTR designer's fallback.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConvergenceError, Unreachable
from .graph import (
    Network,
    Path,
    WeightVector,
    all_shortest_paths,
    path_resource,
    route,
)
from .rational import Number, exact, float_up


@dataclass(frozen=True)
class MetricSet:
    """Per-arc additive resource values, one vector per base topology.

    By convention metric 0 is delay and metric 1 is additive loss. The
    virtual-topology pipeline requires exactly two metrics.
    """

    names: tuple[str, ...]
    values: tuple[tuple[Number, ...], ...]

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("one name per metric required")
        lengths = {len(v) for v in self.values}
        if len(lengths) > 1:
            raise ValueError("metric vectors must have equal length")
        for vec in self.values:
            for x in vec:
                if x < 0:
                    raise ValueError("metric values must be nonnegative")

    @classmethod
    def create(cls, names: Sequence[str], values: Sequence[Sequence]) -> "MetricSet":
        return cls(
            tuple(names),
            tuple(tuple(exact(x) for x in vec) for vec in values),
        )

    @property
    def n_metrics(self) -> int:
        return len(self.values)

    @property
    def n_arcs(self) -> int:
        return len(self.values[0]) if self.values else 0

    def weight_vector(self, metric_idx: int) -> WeightVector:
        return WeightVector(self.values[metric_idx])

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "values": [[float_up(x) for x in vec] for vec in self.values],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricSet":
        return cls.create(data["names"], data["values"])


@dataclass(frozen=True)
class Demand:
    """Traffic demand with one end-to-end bound per metric."""

    id: int
    src: int
    dst: int
    bounds: tuple[Number, ...]

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"demand {self.id}: src equals dst ({self.src})")
        for b in self.bounds:
            if not b > 0:
                raise ValueError(f"demand {self.id}: bounds must be positive")

    @classmethod
    def create(cls, id: int, src: int, dst: int, bounds: Sequence) -> "Demand":
        return cls(id, src, dst, tuple(exact(b) for b in bounds))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "src": self.src,
            "dst": self.dst,
            "bounds": [float_up(b) for b in self.bounds],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Demand":
        return cls.create(data["id"], data["src"], data["dst"], data["bounds"])


def demands_to_json(demands: Sequence[Demand]) -> str:
    return json.dumps({"demands": [k.to_dict() for k in demands]}, sort_keys=True)


def demands_from_json(text: str) -> list[Demand]:
    return [Demand.from_dict(d) for d in json.loads(text)["demands"]]


@dataclass(frozen=True)
class LaracResult:
    """Outcome of one LARAC run.

    ``lambda_star`` is the dual-optimal multiplier (``None`` when the
    instance is infeasible, i.e. even the constrained-metric shortest path
    violates the bound). When ``feasible``, ``path`` satisfies the
    constrained-metric bound.
    """

    lambda_star: Fraction | None
    path: Path | None
    feasible: bool


def combine_metrics(ms: MetricSet, coefficients: Sequence[Number]) -> WeightVector:
    """Per-arc linear combination of the metric vectors."""
    if len(coefficients) != ms.n_metrics:
        raise ValueError("one coefficient per metric required")
    coeffs = [exact(c) for c in coefficients]
    combined = []
    for arc_id in range(ms.n_arcs):
        total: Number = 0
        for c, vec in zip(coeffs, ms.values):
            if c:
                total = total + c * vec[arc_id]
        combined.append(total)
    return WeightVector(combined)


def exact_csp(net: Network, ms: MetricSet, k: Demand) -> Path | None:
    """Exact constrained shortest path.

    Returns a simple path satisfying every bound of ``k`` that minimizes
    metric 0 among bound-satisfying paths (ties: metric 1, then remaining
    metrics, then lexicographic arc ids), or ``None`` when no such path
    exists. Pareto label-correcting with dominance pruning; labels whose
    cost exceeds any bound are cut immediately.
    """
    bounds = k.bounds
    zero = tuple(0 for _ in range(ms.n_metrics))

    def prunes(costs_a, arcs_a, vis_a, costs_b, arcs_b, vis_b) -> bool:
        # a makes b redundant: strictly dominating, or an equal-cost twin on
        # the same node set with lexicographically smaller arcs. Equal-cost
        # labels with different node sets are both kept: their feasible
        # extensions can differ.
        if not all(ca <= cb for ca, cb in zip(costs_a, costs_b)):
            return False
        if costs_a != costs_b:
            return True
        return vis_a == vis_b and arcs_a <= arcs_b

    # frontier[v]: non-redundant labels (costs, arcs, visited) at node v.
    frontier: list[list[tuple[tuple, tuple, frozenset]]] = [
        [] for _ in range(net.n_nodes)
    ]
    start = (zero, (), frozenset((k.src,)))
    frontier[k.src].append(start)
    counter = itertools.count()
    heap = [(zero, next(counter), k.src, (), start[2])]
    best: tuple[tuple, tuple] | None = None

    while heap:
        costs, _, node, arcs, visited = heapq.heappop(heap)
        if not any(fc == costs and fa == arcs for fc, fa, _ in frontier[node]):
            continue  # superseded since insertion
        if node == k.dst:
            cand = (costs, arcs)
            if best is None or cand < best:
                best = cand
            continue
        for arc in net.out_arcs[node]:
            v = arc.head
            if v in visited:
                continue
            new_costs = tuple(c + ms.values[i][arc.id] for i, c in enumerate(costs))
            if any(c > b for c, b in zip(new_costs, bounds)):
                continue
            new_arcs = arcs + (arc.id,)
            new_vis = visited | {v}
            if any(
                prunes(fc, fa, fv, new_costs, new_arcs, new_vis)
                for fc, fa, fv in frontier[v]
            ):
                continue
            frontier[v] = [
                (fc, fa, fv)
                for fc, fa, fv in frontier[v]
                if not prunes(new_costs, new_arcs, new_vis, fc, fa, fv)
            ]
            frontier[v].append((new_costs, new_arcs, new_vis))
            heapq.heappush(heap, (new_costs, next(counter), v, new_arcs, new_vis))
    if best is None:
        return None
    return Path(k.src, k.dst, best[1])


def larac(
    net: Network,
    ms: MetricSet,
    cost_idx: int,
    constr_idx: int,
    bound: Number,
    src: int,
    dst: int,
) -> LaracResult:
    """Lagrangian-relaxation CSP: minimize ``cost_idx`` subject to a bound
    on ``constr_idx``.

    Classic iteration with exact rationals: shortest path on cost alone; if
    it meets the bound the multiplier is 0. Otherwise bracket with the
    constrained-metric shortest path and pivot on the intersection
    multiplier until the combined costs coincide; that multiplier is
    dual-optimal. The returned path is the feasible-side path.
    """
    if cost_idx == constr_idx:
        raise ValueError("cost and constrained metric must differ")
    bound = exact(bound)
    cost_m = ms.values[cost_idx]
    constr_m = ms.values[constr_idx]

    def sp(weights: WeightVector) -> Path:
        return route(net, weights, src, dst)  # raises Unreachable

    p_c = sp(ms.weight_vector(cost_idx))
    if path_resource(p_c, constr_m) <= bound:
        return LaracResult(Fraction(0), p_c, True)
    p_d = sp(ms.weight_vector(constr_idx))
    if path_resource(p_d, constr_m) > bound:
        return LaracResult(None, None, False)

    max_iterations = 10 * net.n_arcs
    for _ in range(max_iterations):
        c_c, r_c = path_resource(p_c, cost_m), path_resource(p_c, constr_m)
        c_d, r_d = path_resource(p_d, cost_m), path_resource(p_d, constr_m)
        lam = Fraction(c_c - c_d, r_d - r_c)
        combined = []
        for arc_id in range(net.n_arcs):
            combined.append(cost_m[arc_id] + lam * constr_m[arc_id])
        p_l = sp(WeightVector(combined))
        c_l = path_resource(p_l, cost_m) + lam * path_resource(p_l, constr_m)
        if c_l == c_c + lam * r_c:
            return LaracResult(lam, p_d, True)
        if path_resource(p_l, constr_m) <= bound:
            p_d = p_l
        else:
            p_c = p_l
    raise ConvergenceError(
        f"LARAC exceeded {max_iterations} iterations between {src} and {dst}"
    )


def lambda_shortest(
    net: Network,
    ms: MetricSet,
    lam: Number,
    src: int,
    dst: int,
    cap: int = 1000,
) -> list[Path]:
    """All shortest paths under the combined weight metric0 + lam*metric1."""
    lam = exact(lam)
    if lam < 0:
        raise ValueError("multiplier must be nonnegative")
    w = combine_metrics(ms, (1, lam))
    return all_shortest_paths(net, w, src, dst, cap=cap)


def tamcra(
    net: Network, ms: MetricSet, k: Demand, k_paths: int = 8
) -> Path | None:
    """k-path multi-constraint heuristic.

    Labels are ordered by the nonlinear length ``max_t(consumption_t /
    bound_t)``; each node keeps up to ``k_paths`` non-dominated labels
    (component-wise dominance with at least one strict inequality). Returns
    a path of length <= 1 when one is found; may miss solutions that
    :func:`exact_csp` finds when ``k_paths`` is small.
    """
    if k_paths < 1:
        raise ValueError("k_paths must be >= 1")
    n_metrics = ms.n_metrics
    bounds = k.bounds

    def length(costs) -> Fraction:
        return max(Fraction(c) / Fraction(b) for c, b in zip(costs, bounds))

    zero = tuple(0 for _ in range(n_metrics))
    stored: list[list[tuple[tuple, tuple]]] = [[] for _ in range(net.n_nodes)]
    stored[k.src].append((zero, ()))
    counter = itertools.count()
    heap = [(Fraction(0), next(counter), k.src, zero, ())]
    while heap:
        ell, _, node, costs, arcs = heapq.heappop(heap)
        if (costs, arcs) not in stored[node]:
            continue
        if node == k.dst:
            if ell <= 1:
                return Path(k.src, k.dst, arcs)
            continue
        for arc in net.out_arcs[node]:
            v = arc.head
            new_costs = tuple(c + ms.values[i][arc.id] for i, c in enumerate(costs))
            new_ell = length(new_costs)
            if new_ell > 1:
                continue
            labels = stored[v]
            if any(
                all(fc[i] <= new_costs[i] for i in range(n_metrics))
                for fc, _ in labels
            ):
                # dominated or duplicate
                continue
            labels = [
                (fc, fa)
                for fc, fa in labels
                if not (
                    all(new_costs[i] <= fc[i] for i in range(n_metrics))
                    and new_costs != fc
                )
            ]
            new_arcs = arcs + (arc.id,)
            if len(labels) >= k_paths:
                worst = max(range(len(labels)), key=lambda i: length(labels[i][0]))
                if length(labels[worst][0]) <= new_ell:
                    stored[v] = labels
                    continue
                del labels[worst]
            labels.append((new_costs, new_arcs))
            stored[v] = labels
            heapq.heappush(heap, (new_ell, next(counter), v, new_costs, new_arcs))
    return None
