"""Command line interface.

Subcommands cover the whole pipeline: instance generation, MTR and vMTR
design, LP model export, plan evaluation and the benchmark harness.
``TOPOFORGE_THREADS`` caps worker threads everywhere.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path as FsPath

import click

from . import __version__
from .evaluate import atomic_write, evaluate_plan, report_to_rows, run_experiment
from .ilp import IlpConfig, export_mtr_ilp, export_vmtr_ilp
from .instances import InstanceSpec, instance_from_sndlib, synth_instance
from .mtr import SearchConfig, greedy_mtr, plan_to_dict
from .vmtr import VmtrPlan, design_vmtr


def _load_instance(path: str) -> InstanceSpec:
    return InstanceSpec.from_json(FsPath(path).read_text(encoding="utf-8"))


def _write_output(path: str | None, data: str) -> None:
    if path is None or path == "-":
        click.echo(data, nl=False)
    else:
        atomic_write(FsPath(path), data)


def _parse_seeds(spec: str) -> list[int]:
    """'1..5' (inclusive range) or '1,2,7'."""
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",") if s]


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Weight design for multi-topology IGP routing."""


@main.command("gen-instance")
@click.option("--sndlib", type=click.Path(exists=True), help="SNDlib native file.")
@click.option("--synthetic", type=int, help="Node count for a synthetic instance.")
@click.option("--density", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--kappa", type=float, default=None, help="Loss constant (default: 2.5% loss on the smallest link).")
@click.option("--epsilon-b", type=float, default=0.05, show_default=True, help="Relative bound tightening.")
@click.option("--bounds", type=click.Choice(["cross", "literal"]), default="cross", show_default=True)
@click.option("--distance-mode", type=click.Choice(["euclidean", "haversine"]), default=None, help="Default: autodetect lon/lat.")
@click.option("-o", "--output", default="-")
def gen_instance(sndlib, synthetic, density, seed, kappa, epsilon_b, bounds, distance_mode, output):
    """Build a problem instance from an SNDlib file or a synthetic graph."""
    if (sndlib is None) == (synthetic is None):
        raise click.UsageError("pass exactly one of --sndlib or --synthetic")
    if sndlib is not None:
        text = FsPath(sndlib).read_text(encoding="utf-8")
        inst = instance_from_sndlib(
            text,
            source=FsPath(sndlib).name,
            kappa=kappa,
            epsilon_b=epsilon_b,
            distance_mode=distance_mode,
            bounds_mode=bounds,
        )
    else:
        inst = synth_instance(
            synthetic, density=density, seed=seed, kappa=kappa,
            epsilon_b=epsilon_b, bounds_mode=bounds,
        )
    _write_output(output, inst.to_json() + "\n")
    click.echo(
        f"instance: {inst.network.n_nodes} nodes, {inst.network.n_arcs} arcs, "
        f"{len(inst.demands)} demands",
        err=True,
    )


@main.command("design-mtr")
@click.argument("instance", type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-ite", type=int, default=50, show_default=True)
@click.option("-o", "--output", default="-")
def design_mtr(instance, seed, max_ite, output):
    """Design real MTR topologies by greedy local search."""
    inst = _load_instance(instance)
    cfg = SearchConfig(max_iterations=max_ite, rng_seed=seed)
    plan = greedy_mtr(inst.network, inst.metrics, inst.demands, cfg)
    _write_output(output, json.dumps(plan_to_dict(plan), sort_keys=True) + "\n")
    click.echo(f"designed {len(plan)} topologies", err=True)


@main.command("design-vmtr")
@click.argument("instance", type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for the MTR fallback pool.")
@click.option("--max-ite", type=int, default=50, show_default=True)
@click.option("--lambda-placement", type=click.Choice(["max", "midpoint"]), default="max", show_default=True)
@click.option("-o", "--output", default="-")
def design_vmtr_cmd(instance, seed, max_ite, lambda_placement, output):
    """Design virtual topologies, with MTR fallback for the leftover pool."""
    inst = _load_instance(instance)
    cfg = SearchConfig(
        max_iterations=max_ite, rng_seed=seed, lambda_placement=lambda_placement
    )
    plan = design_vmtr(inst.network, inst.metrics, inst.demands, cfg)
    _write_output(output, json.dumps(plan.to_dict(), sort_keys=True) + "\n")
    click.echo(
        f"designed {len(plan.virtual)} virtual + {len(plan.real)} real topologies",
        err=True,
    )


@main.command("export-ilp")
@click.argument("instance", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["mtr", "vmtr"]), default="mtr", show_default=True)
@click.option("--tbar-max", type=int, required=True, help="Designed-topology variable budget.")
@click.option("--n-virtual", type=int, default=None, help="Virtual slots (vmtr mode; default: all).")
@click.option("--big-m", type=float, default=None)
@click.option("--penalty-real", type=float, default=1000.0, show_default=True)
@click.option("--literal-ct3", is_flag=True, help="Emit the activation link without |K| scaling.")
@click.option("--hint-topologies", type=int, default=None, help="Known-feasible plan size; errors when the budget is below it.")
@click.option("-o", "--output", default="-")
def export_ilp(instance, mode, tbar_max, n_virtual, big_m, penalty_real, literal_ct3, hint_topologies, output):
    """Write the design model as a CPLEX-LP file for an external solver."""
    inst = _load_instance(instance)
    cfg = IlpConfig(
        t_bar_max=tbar_max,
        big_m=big_m,
        penalty_real=penalty_real,
        n_virtual=n_virtual,
        literal_ct3=literal_ct3,
    )
    if mode == "mtr":
        text = export_mtr_ilp(inst, cfg, hint_topologies)
    else:
        text = export_vmtr_ilp(inst, cfg, hint_topologies)
    _write_output(output, text)


@main.command("evaluate")
@click.argument("instance", type=click.Path(exists=True))
@click.argument("plan", type=click.Path(exists=True))
@click.option("-o", "--output", default="-", help="Long-format robustness CSV.")
def evaluate_cmd(instance, plan, output):
    """Recompute and verify a plan; write per-demand robustness ratios."""
    inst = _load_instance(instance)
    data = json.loads(FsPath(plan).read_text(encoding="utf-8"))
    if "discarded_to_mtr" in data or any(
        t.get("kind") == "virtual" for t in data["topologies"]
    ):
        plan_obj = VmtrPlan.from_dict(data)
    else:
        from .mtr import RealTopology

        plan_obj = [RealTopology.from_dict(t) for t in data["topologies"]]
    report = evaluate_plan(inst, plan_obj, FsPath(instance).stem)
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf,
        fieldnames=["instance", "method", "demand", "metric", "consumption", "bound", "ratio"],
    )
    writer.writeheader()
    for row in report_to_rows(report):
        writer.writerow(row)
    _write_output(output, buf.getvalue())
    click.echo(
        f"{report.method}: {report.n_topologies} topologies "
        f"({report.n_virtual} virtual, {report.n_real} real), "
        f"{report.n_demands} demands, "
        f"mean robustness delay={report.mean_ratio('delay'):.3f} "
        f"loss={report.mean_ratio('loss'):.3f}",
        err=True,
    )


@main.command("bench")
@click.option("--suite", type=click.Path(exists=True, file_okay=False), required=True, help="Directory of instance JSON files.")
@click.option("--seeds", default="1..3", show_default=True, help="'1..5' or '1,2,7'.")
@click.option("--max-ite", type=int, default=50, show_default=True)
@click.option("--lambda-placement", type=click.Choice(["max", "midpoint"]), default="max", show_default=True)
@click.option("-o", "--out-dir", required=True)
def bench(suite, seeds, max_ite, lambda_placement, out_dir):
    """Run both designers over an instance suite and persist plot data."""
    suite_dir = FsPath(suite)
    paths = sorted(suite_dir.glob("*.json"))
    if not paths:
        raise click.UsageError(f"no *.json instances under {suite_dir}")
    instances = [
        (p.stem, InstanceSpec.from_json(p.read_text(encoding="utf-8")))
        for p in paths
    ]
    cfg = SearchConfig(max_iterations=max_ite, lambda_placement=lambda_placement)
    manifest = run_experiment(instances, _parse_seeds(seeds), out_dir, cfg)
    failures = manifest["errors"]
    click.echo(
        f"ran {len(instances)} instances x {len(_parse_seeds(seeds))} seeds; "
        f"{len(failures)} failures; results in {out_dir}",
        err=True,
    )
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
