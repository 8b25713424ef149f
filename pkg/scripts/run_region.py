#!/usr/bin/env python3
"""Recovery-region sweep at n = 100: success rate over the (b, m) grid.

Full preset is ~200 solver runs on the 100^3 cube; expect on the order of
an hour on one core.  Any flag can be overridden from the command line
(last value wins), e.g. a quick look:

    python scripts/run_region.py --n 30 --r 20 --b 1:2 --m 5:7 --trials 1
"""

import sys

from odtrec.cli import main

PRESET = [
    "experiment", "region",
    "--n", "100",
    "--r", "100",
    "--b", "1:8",
    "--m", "2:7",
    "--trials", "3",
    "--seed", "0",
    "--out", "results/region",
]

if __name__ == "__main__":
    sys.exit(main(PRESET + sys.argv[1:]))
