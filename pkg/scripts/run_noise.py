#!/usr/bin/env python3
"""Dense-noise sensitivity: mean recovery error over the (noise ratio, r)
grid at n = 65, b = 5, with entrywise noise added OFF the corrupted pattern.

The full preset (100 trials per cell) is a long run; a reduced pass:

    python scripts/run_noise.py --trials 10 --r 30:60:15
"""

import sys

from odtrec.cli import main

PRESET = [
    "experiment", "noise",
    "--n", "65",
    "--b", "5",
    "--r", "20:60:10",
    "--noise-ratio", "0,1e-4,1e-3,1e-2",
    "--trials", "100",
    "--seed", "0",
    "--out", "results/noise",
]

if __name__ == "__main__":
    sys.exit(main(PRESET + sys.argv[1:]))
