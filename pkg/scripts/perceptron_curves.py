#!/usr/bin/env python3
"""Analytic curves for the two-Gaussian linear classifier.

Produces, for a few class separations:
  * risk entropy per feature (large-p limit) over the achievable risk band,
  * Hebbian learning curves, closed form next to 100-run simulations,
  * exact Boltzmann risk versus temperature.

Usage: python scripts/perceptron_curves.py [outdir]
"""

import sys
from pathlib import Path

from risklab.cli import dispatch

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/perceptron")
OUT.mkdir(parents=True, exist_ok=True)

DELTAS = ["0.5", "1", "2", "3"]
M_GRID = ",".join(str(m) for m in [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000])
BETAS = ",".join(str(b) for b in [0, 0.5, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024])


def run(args):
    code = dispatch([str(a) for a in args])
    if code != 0:
        raise SystemExit(code)


for delta in DELTAS:
    tag = delta.replace(".", "p")
    run(["analytic", "perceptron-entropy", "--p", 1000, "--delta", delta,
         "--points", 401, "--out", OUT / f"entropy_delta{tag}.csv"])
    run(["analytic", "boltzmann-risk", "--p", 20, "--delta", delta,
         "--beta-grid", BETAS, "--out", OUT / f"boltzmann_delta{tag}.csv"])

for p in (50, 100, 200):
    for delta in ("1", "2", "4"):
        tag = f"p{p}_d{delta}"
        run(["analytic", "hebbian", "--p", p, "--delta", delta,
             "--m-grid", M_GRID, "--out", OUT / f"hebbian_closed_{tag}.csv"])
        run(["simulate", "hebbian", "--p", p, "--delta", delta, "--m-grid", M_GRID,
             "--runs", 100, "--seed", 2024, "--out", OUT / f"hebbian_sim_{tag}.csv"])

print(f"wrote perceptron curve data to {OUT}/")
