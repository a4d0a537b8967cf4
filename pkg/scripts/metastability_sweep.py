"""Beta sweep on the double-well potential: where does the mass end up?

Runs configs/metastability.cfg through the CLI runner, then summarizes each
member's final profile: location of the maximum and the mass in a +-0.5
window around the shallow well at pi/2.

    python scripts/metastability_sweep.py [--T 10000] [--out out/metastability]
"""

from __future__ import annotations

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from fractorus.cli import execute
from fractorus.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def summarize(snapshots: Path, T: float) -> tuple[float, float]:
    with open(snapshots, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if math.isclose(float(r["t"]), T)]
    x = np.array([float(r["x_1"]) for r in rows])
    u = np.array([float(r["u"]) for r in rows])
    dx = 2 * math.pi / len(x)
    window = np.abs(x - math.pi / 2) <= 0.5
    return float(x[np.argmax(u)]), float(np.sum(u[window]) * dx)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", type=Path, default=ROOT / "configs" / "metastability.cfg")
    ap.add_argument("--T", type=float, default=None, help="override the final time")
    ap.add_argument("--out", type=Path, default=Path("out/metastability"))
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.T is not None:
        cfg = cfg.replace(T=args.T, snapshots=tuple(t for t in cfg.snapshots if t <= args.T) + (args.T,))
    execute(cfg.replace(experiment="sweep"), args.out)

    print(f"T = {cfg.T:g}, deep well at 3pi/2 = {1.5 * math.pi:.4f}")
    print(f"{'beta':>6} {'argmax u':>10} {'mass near pi/2':>16}")
    for beta in cfg.sweep_values:
        xmax, mass = summarize(args.out / f"beta={beta!r}" / "snapshots.csv", cfg.T)
        print(f"{beta:>6g} {xmax:>10.4f} {mass:>16.5f}")


if __name__ == "__main__":
    main()
