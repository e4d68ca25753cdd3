"""Plan evaluation and the experiment harness.

Evaluation never trusts plan-internal state: every route is recomputed from
the deployed weights, feasibility is re-asserted per metric, and the QoS
robustness ratio (consumption over bound; 1 means the path sits exactly at
its budget) is reported per demand and metric.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path as FsPath
from typing import Sequence

from . import __version__
from .errors import InvalidPlan, Unreachable
from .graph import WeightVector, path_resource, route
from .instances import InstanceSpec
from .mtr import SearchConfig, greedy_mtr, plan_to_dict
from .vmtr import VmtrPlan, design_vmtr, virtual_weights

RESULTS_SCHEMA = 1
RESULT_COLUMNS = [
    "schema",
    "instance",
    "seed",
    "method",
    "topologies",
    "virtual",
    "real",
    "demands",
    "avg_demands_per_topology",
    "robustness_mean_delay",
    "robustness_mean_loss",
    "time_intervals_s",
    "time_cover_s",
    "time_fallback_s",
    "time_total_s",
]
TIME_COLUMNS = [c for c in RESULT_COLUMNS if c.startswith("time_")]


@dataclass(frozen=True)
class RobustnessEntry:
    demand: int
    metric: str
    consumption: float
    bound: float
    ratio: float


@dataclass(frozen=True)
class EvalReport:
    """Independent evaluation of one plan on one instance."""

    instance: str
    method: str
    n_virtual: int
    n_real: int
    n_demands: int
    robustness: tuple[RobustnessEntry, ...]

    @property
    def n_topologies(self) -> int:
        return self.n_virtual + self.n_real

    @property
    def avg_demands_per_topology(self) -> float:
        if self.n_topologies == 0:
            return 0.0
        return self.n_demands / self.n_topologies

    def mean_ratio(self, metric: str) -> float:
        ratios = [e.ratio for e in self.robustness if e.metric == metric]
        return sum(ratios) / len(ratios) if ratios else 0.0


def _plan_topologies(plan) -> list[tuple[str, object]]:
    if isinstance(plan, VmtrPlan):
        return [("virtual", t) for t in plan.virtual] + [
            ("real", t) for t in plan.real
        ]
    return [("real", t) for t in plan]


def evaluate_plan(
    inst: InstanceSpec, plan, instance_name: str = "", method: str | None = None
) -> EvalReport:
    """Recompute, verify and measure a plan against its instance.

    ``plan`` is either a :class:`VmtrPlan` or a sequence of
    :class:`RealTopology`. Raises :class:`InvalidPlan` when a demand is
    unassigned, assigned twice, or when a recomputed route misses a bound.
    """
    ms = inst.metrics
    net = inst.network
    demands = {k.id: k for k in inst.demands}
    assignment: dict[int, tuple[str, WeightVector]] = {}
    n_virtual = n_real = 0
    for kind, topo in _plan_topologies(plan):
        if kind == "virtual":
            weights = virtual_weights(ms, topo.coefficients)
            n_virtual += 1
        else:
            weights = topo.weights
            n_real += 1
        for kid in topo.assigned:
            if kid in assignment:
                raise InvalidPlan(f"demand {kid} is assigned twice")
            if kid not in demands:
                raise InvalidPlan(f"plan references unknown demand {kid}")
            assignment[kid] = (kind, weights)
    missing = sorted(set(demands) - set(assignment))
    if missing:
        raise InvalidPlan(f"plan leaves demands unassigned: {missing}")

    entries: list[RobustnessEntry] = []
    for kid in sorted(assignment):
        k = demands[kid]
        _, weights = assignment[kid]
        try:
            p = route(net, weights, k.src, k.dst)
        except Unreachable:
            raise InvalidPlan(f"demand {kid} unroutable under its topology") from None
        for i, name in enumerate(ms.names):
            consumption = Fraction(path_resource(p, ms.values[i]))
            bound = Fraction(k.bounds[i])
            if consumption > bound:
                raise InvalidPlan(
                    f"demand {kid} violates {name}: {float(consumption)} > "
                    f"{float(bound)}"
                )
            entries.append(
                RobustnessEntry(
                    kid, name, float(consumption), float(bound),
                    float(consumption / bound),
                )
            )
    if method is None:
        method = "vmtr" if isinstance(plan, VmtrPlan) else "mtr"
    return EvalReport(
        instance_name, method, n_virtual, n_real, len(demands), tuple(entries)
    )


def report_to_rows(report: EvalReport) -> list[dict]:
    """Long-format robustness rows for CSV export."""
    return [
        {
            "instance": report.instance,
            "method": report.method,
            "demand": e.demand,
            "metric": e.metric,
            "consumption": e.consumption,
            "bound": e.bound,
            "ratio": e.ratio,
        }
        for e in report.robustness
    ]


def atomic_write(path: FsPath, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _result_row(
    name: str,
    seed: int,
    report: EvalReport,
    times: dict[str, float],
) -> dict:
    return {
        "schema": RESULTS_SCHEMA,
        "instance": name,
        "seed": seed,
        "method": report.method,
        "topologies": report.n_topologies,
        "virtual": report.n_virtual,
        "real": report.n_real,
        "demands": report.n_demands,
        "avg_demands_per_topology": report.avg_demands_per_topology,
        "robustness_mean_delay": report.mean_ratio("delay"),
        "robustness_mean_loss": report.mean_ratio("loss"),
        "time_intervals_s": times.get("intervals_s", 0.0),
        "time_cover_s": times.get("cover_s", 0.0),
        "time_fallback_s": times.get("fallback_s", 0.0),
        "time_total_s": times["total_s"],
    }


def run_experiment(
    suite: Sequence[tuple[str, InstanceSpec]],
    seeds: Sequence[int],
    out_dir: FsPath | str,
    cfg: SearchConfig | None = None,
) -> dict:
    """Design and evaluate both methods over (instance, seed) pairs.

    Writes ``results.csv`` (one row per run), ``results.json`` (rows plus
    per-demand robustness), per-run plan files and ``manifest.json`` with
    everything needed to reproduce byte-identical plans. Timing columns are
    wall clock and vary between runs; every other output is deterministic.
    Returns the manifest.
    """
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base_cfg = cfg if cfg is not None else SearchConfig()
    rows: list[dict] = []
    robustness_rows: list[dict] = []
    errors: list[dict] = []
    for name, inst in suite:
        for seed in seeds:
            run_cfg = SearchConfig(
                max_iterations=base_cfg.max_iterations,
                rng_seed=seed,
                weight_range=base_cfg.weight_range,
                step_epsilon=base_cfg.step_epsilon,
                tamcra_paths=base_cfg.tamcra_paths,
                literal_down_neighbors=base_cfg.literal_down_neighbors,
                literal_fallback=base_cfg.literal_fallback,
                lambda_placement=base_cfg.lambda_placement,
            )
            try:
                t0 = time.perf_counter()
                mtr_plan = greedy_mtr(inst.network, inst.metrics, inst.demands, run_cfg)
                mtr_total = time.perf_counter() - t0
                mtr_report = evaluate_plan(inst, mtr_plan, name)
                rows.append(
                    _result_row(name, seed, mtr_report, {"total_s": mtr_total})
                )
                robustness_rows += [
                    dict(r, seed=seed) for r in report_to_rows(mtr_report)
                ]
                atomic_write(
                    out / f"plan_{name}_seed{seed}_mtr.json",
                    json.dumps(plan_to_dict(mtr_plan), sort_keys=True),
                )

                timings: dict[str, float] = {}
                t0 = time.perf_counter()
                vmtr_plan = design_vmtr(
                    inst.network, inst.metrics, inst.demands, run_cfg, timings
                )
                timings["total_s"] = time.perf_counter() - t0
                vmtr_report = evaluate_plan(inst, vmtr_plan, name)
                rows.append(_result_row(name, seed, vmtr_report, timings))
                robustness_rows += [
                    dict(r, seed=seed) for r in report_to_rows(vmtr_report)
                ]
                atomic_write(
                    out / f"plan_{name}_seed{seed}_vmtr.json",
                    json.dumps(vmtr_plan.to_dict(), sort_keys=True),
                )
            except Exception as err:  # keep partial results
                errors.append({"instance": name, "seed": seed, "error": str(err)})

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    atomic_write(out / "results.csv", buf.getvalue())
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf,
        fieldnames=[
            "instance", "seed", "method", "demand", "metric",
            "consumption", "bound", "ratio",
        ],
    )
    writer.writeheader()
    for row in robustness_rows:
        writer.writerow(row)
    atomic_write(out / "robustness.csv", buf.getvalue())
    atomic_write(
        out / "results.json",
        json.dumps(
            {"rows": rows, "robustness": robustness_rows, "errors": errors},
            sort_keys=True,
        ),
    )
    manifest = {
        "tool": "topoforge",
        "version": __version__,
        "seeds": list(seeds),
        "config": {
            "max_iterations": base_cfg.max_iterations,
            "weight_range": list(base_cfg.weight_range),
            "step_epsilon": base_cfg.step_epsilon,
            "tamcra_paths": base_cfg.tamcra_paths,
            "lambda_placement": base_cfg.lambda_placement,
            "literal_down_neighbors": base_cfg.literal_down_neighbors,
            "literal_fallback": base_cfg.literal_fallback,
        },
        "instances": [
            {
                "name": name,
                "sha256": hashlib.sha256(inst.to_json().encode()).hexdigest(),
            }
            for name, inst in suite
        ],
        "errors": errors,
    }
    atomic_write(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=2))
    return manifest
