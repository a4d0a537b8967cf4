"""Densities of the symmetric 2*beta-stable laws for several beta, one CSV each.

    python scripts/stable_densities.py [--xmax 10] [--n 801] [--out out/stable]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from fractorus.cli import write_csv
from fractorus.stable import stable_density, tail_mass


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--betas", type=float, nargs="+", default=[1.0, 0.75, 0.5, 0.25])
    ap.add_argument("--xmax", type=float, default=10.0)
    ap.add_argument("--n", type=int, default=801)
    ap.add_argument("--out", type=Path, default=Path("out/stable"))
    args = ap.parse_args()

    x = np.linspace(-args.xmax, args.xmax, args.n)
    print(f"{'beta':>6} {'p(0)':>10} {'mass in window':>15} {'+ tails':>10}")
    for beta in args.betas:
        p = stable_density(beta, x)
        write_csv(args.out / f"beta={beta!r}.csv", ["x", "p"], zip(x, p))
        window = np.trapezoid(p, x)
        print(f"{beta:>6g} {p[args.n // 2]:>10.6f} {window:>15.6f} {window + tail_mass(beta, args.xmax):>10.6f}")
    print(f"wrote {len(args.betas)} files to {args.out}")


if __name__ == "__main__":
    main()
