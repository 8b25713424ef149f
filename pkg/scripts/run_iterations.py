#!/usr/bin/env python3
"""Sweep-count benchmark: mean stage-1 sweeps to converge over the (b, r)
grid at n = 100.

Full preset runs 10 trials per feasible cell; expect tens of minutes on one
core.  Flags can be overridden (last value wins):

    python scripts/run_iterations.py --n 40 --b 1:2 --r 15:40:5 --trials 3
"""

import sys

from odtrec.cli import main

PRESET = [
    "experiment", "iters",
    "--n", "100",
    "--b", "1:8",
    "--r", "10:100:10",
    "--trials", "10",
    "--seed", "0",
    "--out", "results/iterations",
]

if __name__ == "__main__":
    sys.exit(main(PRESET + sys.argv[1:]))
