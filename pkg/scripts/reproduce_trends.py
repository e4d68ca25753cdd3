#!/usr/bin/env python3
"""Run the MTR vs virtual-topology comparison and print the headline trends.

Usage: python scripts/reproduce_trends.py [OUT_DIR] [--seeds 1..3] [--max-ite 12]

Designs both kinds of plans for the default suite, then summarizes the three
directional results: real-topology counts, demands per topology and QoS
robustness. Full plot data lands in OUT_DIR (results.csv, robustness.csv,
results.json, manifest.json).
"""

import argparse
import statistics
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from topoforge.evaluate import run_experiment
from topoforge.instances import instance_from_sndlib, synth_instance
from topoforge.mtr import SearchConfig

from make_suite import FIXTURE, SPECS


def parse_seeds(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",")]


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("out_dir", nargs="?", default="results")
    parser.add_argument("--seeds", default="1..3")
    parser.add_argument("--max-ite", type=int, default=12)
    args = parser.parse_args()

    suite = [
        (name, synth_instance(s["n"], density=s["density"], seed=s["seed"]))
        for name, s in SPECS
    ]
    suite.append(("wide12", instance_from_sndlib(FIXTURE.read_text(), "wide12")))
    seeds = parse_seeds(args.seeds)
    manifest = run_experiment(
        suite, seeds, args.out_dir, SearchConfig(max_iterations=args.max_ite)
    )
    if manifest["errors"]:
        print("failures:", manifest["errors"])
        sys.exit(1)

    import csv

    with open(Path(args.out_dir) / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    mtr = [r for r in rows if r["method"] == "mtr"]
    vmtr = [r for r in rows if r["method"] == "vmtr"]

    def mean(rows, col):
        return statistics.mean(float(r[col]) for r in rows)

    print(f"\nruns: {len(mtr)} per method over {len(suite)} instances")
    print(f"topologies            mtr {mean(mtr, 'topologies'):6.2f}   "
          f"vmtr real {mean(vmtr, 'real'):5.2f} + virtual {mean(vmtr, 'virtual'):5.2f}")
    print(f"demands per topology  mtr {mean(mtr, 'avg_demands_per_topology'):6.2f}   "
          f"vmtr {mean(vmtr, 'avg_demands_per_topology'):6.2f}")
    print(f"robustness (delay)    mtr {mean(mtr, 'robustness_mean_delay'):6.3f}   "
          f"vmtr {mean(vmtr, 'robustness_mean_delay'):6.3f}")
    print(f"robustness (loss)     mtr {mean(mtr, 'robustness_mean_loss'):6.3f}   "
          f"vmtr {mean(vmtr, 'robustness_mean_loss'):6.3f}")
    print(f"design time [s]       mtr {mean(mtr, 'time_total_s'):6.2f}   "
          f"vmtr {mean(vmtr, 'time_total_s'):6.2f}")


if __name__ == "__main__":
    main()
