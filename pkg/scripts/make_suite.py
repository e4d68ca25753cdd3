#!/usr/bin/env python3
"""Generate the default synthetic benchmark suite into a directory.

Usage: python scripts/make_suite.py [OUT_DIR]

Writes six instance JSON files: five random geometric graphs from 8 to 16
nodes plus the bundled 12-node SNDlib-format fixture.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from topoforge.evaluate import atomic_write
from topoforge.instances import instance_from_sndlib, synth_instance

SPECS = [
    ("synth08", dict(n=8, density=0.7, seed=3)),
    ("synth10", dict(n=10, density=0.6, seed=5)),
    ("synth12", dict(n=12, density=0.5, seed=2)),
    ("synth14", dict(n=14, density=0.45, seed=4)),
    ("synth16", dict(n=16, density=0.4, seed=8)),
]
FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "wide12.txt"


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("suite")
    out.mkdir(parents=True, exist_ok=True)
    for name, spec in SPECS:
        inst = synth_instance(spec["n"], density=spec["density"], seed=spec["seed"])
        atomic_write(out / f"{name}.json", inst.to_json() + "\n")
        print(f"{name}: {inst.network.n_nodes} nodes, {len(inst.demands)} demands")
    wide = instance_from_sndlib(FIXTURE.read_text(), "wide12")
    atomic_write(out / "wide12.json", wide.to_json() + "\n")
    print(f"wide12: {wide.network.n_nodes} nodes, {len(wide.demands)} demands")


if __name__ == "__main__":
    main()
