"""Exact virtual-topology design over two base metrics.

Per demand, two LARAC runs give the feasible multiplier interval
``[lambda_min, lambda_max] = [lambda2*, 1/lambda1*]``: every multiplier in
between makes some combined-weight shortest path meet both bounds, and every
multiplier strictly inside makes *all* of them meet both bounds. Covering all
intervals with the fewest multipliers is then an interval stabbing problem,
solved exactly by the earliest-deadline greedy.

Stab points land on interval boundaries, where equal-cost ties can include
paths that violate one bound. Deployed multipliers are therefore nudged by a
tiny epsilon into the covered intervals until every assigned demand's
combined-weight shortest paths are all valid; demands that cannot be
validated at their group's multiplier are re-covered at a later stab, and
only irreparable ones (duality-gap demands whose interval is a single point
where no shortest path is feasible) fall back to the MTR designer.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .csp import Demand, MetricSet, combine_metrics, lambda_shortest, larac
from .errors import CapExceeded, Unreachable
from .graph import Network, Path, WeightVector, path_resource
from .mtr import RealTopology, SearchConfig, greedy_mtr
from .rational import Number, exact, float_up

log = logging.getLogger(__name__)

EPS_BUDGET = 64
EPS_UNIT = Fraction(1, 2**20)


@dataclass(frozen=True)
class FeasibleInterval:
    """Feasible multiplier range for one demand; ``lambda_max=None`` is +inf."""

    demand: int
    lambda_min: Fraction
    lambda_max: Fraction | None

    def __post_init__(self):
        if self.lambda_max is not None and self.lambda_min > self.lambda_max:
            raise ValueError("empty interval must be discarded, not stored")

    def contains(self, lam: Fraction) -> bool:
        if lam < self.lambda_min:
            return False
        return self.lambda_max is None or lam <= self.lambda_max


@dataclass(frozen=True)
class VirtualTopology:
    """Multiplier coefficients over the base metrics plus assigned demands.

    Coefficients are normalized with the metric-0 coefficient fixed to 1,
    so for two metrics the topology is the scalar multiplier
    ``coefficients[1]``.
    """

    coefficients: tuple[Number, ...]
    assigned: frozenset[int]

    def __post_init__(self):
        if any(c < 0 for c in self.coefficients):
            raise ValueError("multipliers must be nonnegative")
        if not any(self.coefficients):
            raise ValueError("multipliers must not all be zero")

    def to_dict(self) -> dict:
        return {
            "kind": "virtual",
            "lambda": [float_up(c) if not isinstance(c, int) else float(c)
                       for c in self.coefficients],
            "lambda_exact": [str(Fraction(c)) for c in self.coefficients],
            "demands": sorted(self.assigned),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VirtualTopology":
        if "lambda_exact" in data:
            coeffs = tuple(exact(Fraction(s)) for s in data["lambda_exact"])
        else:
            coeffs = tuple(exact(x) for x in data["lambda"])
        return cls(coeffs, frozenset(data["demands"]))


@dataclass(frozen=True)
class VmtrPlan:
    """Virtual topologies first, MTR fallback topologies second."""

    virtual: tuple[VirtualTopology, ...]
    real: tuple[RealTopology, ...]
    discarded_to_mtr: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "topologies": [t.to_dict() for t in self.virtual]
            + [t.to_dict() for t in self.real],
            "discarded_to_mtr": sorted(self.discarded_to_mtr),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VmtrPlan":
        virtual = []
        real = []
        for entry in data["topologies"]:
            if entry["kind"] == "virtual":
                virtual.append(VirtualTopology.from_dict(entry))
            else:
                real.append(RealTopology.from_dict(entry))
        return cls(
            tuple(virtual), tuple(real), tuple(data.get("discarded_to_mtr", ()))
        )


def virtual_weights(ms: MetricSet, coefficients: Sequence[Number]) -> WeightVector:
    """Per-arc linear combination of the base metrics.

    Weights are strictly positive wherever some combined metric is, so the
    derived topology cannot create routing loops.
    """
    coeffs = tuple(exact(c) for c in coefficients)
    if any(c < 0 for c in coeffs):
        raise ValueError("multipliers must be nonnegative")
    if not any(coeffs):
        raise ValueError("multipliers must not all be zero")
    return combine_metrics(ms, coeffs)


def feasible_interval(
    net: Network, ms: MetricSet, k: Demand
) -> FeasibleInterval | None:
    """Feasible multiplier interval from the two LARAC orientations.

    ``lambda_min`` is the dual-optimal multiplier when metric 0 is minimized
    under the metric-1 bound; ``lambda_max`` is the reciprocal of the
    multiplier from the swapped orientation (+inf when that constraint is
    inactive). Returns ``None`` when either orientation is infeasible or
    the interval is empty: such demands go to the MTR pool.
    """
    if ms.n_metrics != 2:
        raise ValueError("feasible intervals require exactly two base metrics")
    res_min = larac(net, ms, 0, 1, k.bounds[1], k.src, k.dst)
    if not res_min.feasible:
        return None
    res_max = larac(net, ms, 1, 0, k.bounds[0], k.src, k.dst)
    if not res_max.feasible:
        return None
    lambda_min = Fraction(res_min.lambda_star)
    lambda_max = (
        None if res_max.lambda_star == 0 else 1 / Fraction(res_max.lambda_star)
    )
    if lambda_max is not None and lambda_min > lambda_max:
        return None
    return FeasibleInterval(k.id, lambda_min, lambda_max)


def _paths_all_valid(
    net: Network, ms: MetricSet, k: Demand, lam: Fraction
) -> Path | None:
    """First combined-weight shortest path if every one meets both bounds."""
    try:
        paths = lambda_shortest(net, ms, lam, k.src, k.dst)
    except (Unreachable, CapExceeded):
        return None
    for p in paths:
        for i, bound in enumerate(k.bounds):
            if path_resource(p, ms.values[i]) > bound:
                return None
    return paths[0]


def check_lambda(
    net: Network, ms: MetricSet, k: Demand, lam: Number
) -> Path | None:
    """Validated route for demand ``k`` at multiplier ``lam``.

    If every combined-weight shortest path meets both bounds, returns the
    deterministic first one. Otherwise the multiplier is nudged upward by
    ``2**-20 * max(1, lam)`` per step, up to 64 times, until the shortest
    paths are all valid (in particular until a tie has resolved to a unique
    valid path). Returns ``None`` when the budget runs out.
    """
    cur = Fraction(exact(lam))
    if cur < 0:
        raise ValueError("multiplier must be nonnegative")
    for _ in range(EPS_BUDGET + 1):
        path = _paths_all_valid(net, ms, k, cur)
        if path is not None:
            return path
        cur = cur + EPS_UNIT * max(Fraction(1), cur)
    return None


def min_multiplier_cover(
    intervals: Sequence[FeasibleInterval],
) -> list[tuple[Fraction, list[int]]]:
    """Minimum set of stabbing multipliers covering every interval.

    Earliest-deadline greedy: repeatedly stab at the smallest ``lambda_max``
    among uncovered intervals and cover everything containing it. Intervals
    open to +inf are stabbed last, at the largest ``lambda_min`` among them.
    The number of stabs is the minimum possible (interval clique cover).
    """
    remaining = sorted(
        intervals,
        key=lambda iv: (
            iv.lambda_max is None,
            iv.lambda_max if iv.lambda_max is not None else Fraction(0),
            iv.lambda_min,
            iv.demand,
        ),
    )
    cover: list[tuple[Fraction, list[int]]] = []
    while remaining:
        first = remaining[0]
        if first.lambda_max is not None:
            stab = first.lambda_max
        else:
            stab = max(iv.lambda_min for iv in remaining)
        covered = [iv for iv in remaining if iv.contains(stab)]
        cover.append((Fraction(stab), [iv.demand for iv in covered]))
        covered_ids = {iv.demand for iv in covered}
        remaining = [iv for iv in remaining if iv.demand not in covered_ids]
    return cover


def _validate_group(
    net: Network,
    ms: MetricSet,
    group: list[Demand],
    lam0: Fraction,
    prefer_down: bool,
) -> tuple[Fraction, set[int], list[Demand]]:
    """Find one deployable multiplier for a covered group.

    Tries the stab point first, then epsilon steps into the common interval
    (downward for finite-deadline stabs, upward for the +inf group), then
    the opposite direction. Returns the multiplier maximizing the number of
    demands whose shortest paths are all valid, the ids validated there, and
    the demands left over.
    """
    candidates = [lam0]
    down, upw = [], []
    cur = lam0
    for _ in range(EPS_BUDGET // 2):
        cur = cur - EPS_UNIT * max(Fraction(1), cur)
        if cur < 0:
            break
        down.append(cur)
    cur = lam0
    for _ in range(EPS_BUDGET // 2):
        cur = cur + EPS_UNIT * max(Fraction(1), cur)
        upw.append(cur)
    candidates += (down + upw) if prefer_down else (upw + down)

    best: tuple[int, Fraction, set[int]] | None = None
    for lam in candidates:
        ok = {
            k.id for k in group if _paths_all_valid(net, ms, k, lam) is not None
        }
        if len(ok) == len(group):
            return lam, ok, []
        if best is None or len(ok) > best[0]:
            best = (len(ok), lam, ok)
    assert best is not None
    _, lam, ok = best
    leftover = [k for k in group if k.id not in ok]
    return lam, ok, leftover


def design_vmtr(
    net: Network,
    ms: MetricSet,
    demands: Sequence[Demand],
    cfg: SearchConfig,
    timings: dict | None = None,
) -> VmtrPlan:
    """Full virtual-topology pipeline with MTR fallback.

    Every demand must be feasible for the exact constrained-path solver.
    Demands without a feasible interval go straight to the MTR pool; covered
    demands are validated at their group's deployed multiplier, re-covered
    at a later stab when validation fails, and pooled only when their own
    deadline stab cannot be validated either. The pool is then handed to
    :func:`greedy_mtr`.

    ``cfg.lambda_placement`` picks the deployed multiplier inside each
    covered group: the stab point itself (``"max"``, the algorithm as
    stated) or the midpoint of the group's common interval (``"midpoint"``,
    which avoids boundary ties altogether).
    """
    if ms.n_metrics != 2:
        raise ValueError(
            "virtual design covers exactly two base topologies; the "
            "multi-dimensional multiplier cover for three or more is a "
            "hard problem with no exact algorithm here"
        )
    by_id = {k.id: k for k in demands}
    if len(by_id) != len(demands):
        raise ValueError("demand ids must be unique")

    t0 = time.perf_counter()
    intervals: list[FeasibleInterval] = []
    pool: list[Demand] = []
    for k in sorted(demands, key=lambda d: d.id):
        iv = feasible_interval(net, ms, k)
        if iv is None:
            pool.append(k)
        else:
            intervals.append(iv)
    t1 = time.perf_counter()

    iv_by_id = {iv.demand: iv for iv in intervals}
    virtual: list[VirtualTopology] = []
    pending = intervals
    while pending:
        cover = min_multiplier_cover(pending)
        next_pending: list[FeasibleInterval] = []
        for stab, ids in cover:
            group = [by_id[i] for i in ids]
            group_ivs = [iv_by_id[i] for i in ids]
            lower = max(iv.lambda_min for iv in group_ivs)
            infinite_group = all(iv.lambda_max is None for iv in group_ivs)
            if cfg.lambda_placement == "midpoint" and not infinite_group:
                target = (lower + stab) / 2
                prefer_down = False
            else:
                target = stab
                prefer_down = not infinite_group
            lam, ok, leftover = _validate_group(
                net, ms, group, target, prefer_down
            )
            if ok:
                # Assign the passers; everyone else gets re-covered at a
                # later stab of their own.
                virtual.append(VirtualTopology((1, lam), frozenset(ok)))
                for k in leftover:
                    next_pending.append(iv_by_id[k.id])
            else:
                # No candidate multiplier validates anyone: the deadline
                # demand's own region was probed and failed, so it goes to
                # the MTR pool; the rest retry elsewhere. This keeps every
                # round strictly shrinking.
                for k in leftover:
                    iv = iv_by_id[k.id]
                    at_deadline = (
                        iv.lambda_max == stab
                        if not infinite_group
                        else iv.lambda_min == stab
                    )
                    if at_deadline:
                        log.debug(
                            "demand %d not validatable at its deadline stab %s",
                            k.id,
                            stab,
                        )
                        pool.append(k)
                    else:
                        next_pending.append(iv)
        pending = next_pending
    t2 = time.perf_counter()

    pool.sort(key=lambda k: k.id)
    real = tuple(greedy_mtr(net, ms, pool, cfg)) if pool else ()
    t3 = time.perf_counter()

    if timings is not None:
        timings["intervals_s"] = t1 - t0
        timings["cover_s"] = t2 - t1
        timings["fallback_s"] = t3 - t2
    return VmtrPlan(
        tuple(virtual), real, tuple(sorted(k.id for k in pool))
    )
