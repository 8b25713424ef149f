"""Command-line front end.

Subcommands:
  gen         synthesize a corrupted instance and write it as a tensor file
  recover     read a tensor file, run the five-step recovery, write results
  experiment  run one of the benchmark sweeps (region | iters | noise)

Exit status: 0 on success, 2 for infeasible geometry, 3 for solver
non-convergence or degeneracy, 64 for usage or file-format errors.
All outputs are bytewise deterministic functions of the arguments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds
from .errors import (
    ConvergenceError,
    DegenerateInstanceError,
    FeasibilityError,
    FormatError,
)
from .experiments import (
    DEFAULT_CORRUPTION_SCALE,
    experiment_iterations,
    experiment_noise,
    experiment_region,
)
from .fileio import read_tensor, write_metadata, write_report, write_tensor
from .pipeline import PipelineConfig, recover
from .stage1 import SolveConfig
from .synth import NoiseSpec, add_entrywise_noise, generate_problem

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NONCONVERGENCE = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; the contract wants 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_range(text: str) -> list[int]:
    """Accept '7', '1,3,5', or 'lo:hi[:step]' with inclusive endpoints."""
    vals: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ":" in part:
                nums = [int(x) for x in part.split(":")]
                if len(nums) == 2:
                    lo, hi, st = nums[0], nums[1], 1
                elif len(nums) == 3:
                    lo, hi, st = nums
                else:
                    raise ValueError("too many ':' separators")
                if st <= 0 or hi < lo:
                    raise ValueError("empty or backwards span")
                vals.extend(range(lo, hi + 1, st))
            else:
                vals.append(int(part))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}: {e}")
    if not vals:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}: empty")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}: {e}")
    if not vals:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}: empty")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="odtrec",
        description="Exact tensor recovery under band-structured corruption.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="synthesize a corrupted instance")
    g.add_argument("--n", type=int, required=True, help="tensor side length")
    g.add_argument("--r", type=int, required=True, help="decomposition rank")
    g.add_argument("--b", type=int, required=True, help="corruption band half-width")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--corruption-scale", type=float, default=DEFAULT_CORRUPTION_SCALE,
                   help="standard deviation of the structured corruption")
    g.add_argument("--noise-ratio", type=float, default=0.0,
                   help="dense noise norm as a fraction of the clean norm")
    g.add_argument("--out", required=True, help="output tensor file")
    g.set_defaults(func=_cmd_gen)

    rc = sub.add_parser("recover", help="recover the clean tensor from a file")
    rc.add_argument("input", help="observed tensor file")
    rc.add_argument("--r", type=int, required=True, help="decomposition rank")
    rc.add_argument("--b", type=int, required=True, help="corruption band half-width")
    rc.add_argument("--m", type=int, default=0,
                    help="distinguished slice count (0 = auto)")
    rc.add_argument("--tol", type=float, default=1e-8,
                    help="relative-improvement stopping tolerance")
    rc.add_argument("--max-iters", type=int, default=500)
    rc.add_argument("--out", required=True, help="recovered tensor file")
    rc.set_defaults(func=_cmd_recover)

    ex = sub.add_parser("experiment", help="run a benchmark sweep")
    ex.add_argument("kind", choices=("region", "iters", "noise"))
    ex.add_argument("--n", type=int, default=None)
    ex.add_argument("--r", type=_int_range, default=None,
                    help="rank or rank range (lo:hi[:step] or comma list)")
    ex.add_argument("--b", type=_int_range, default=None,
                    help="band half-width or range")
    ex.add_argument("--m", type=_int_range, default=None,
                    help="slice count or range (region only)")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--trials", type=int, default=None)
    ex.add_argument("--tol", type=float, default=None,
                    help="per-sweep stopping tolerance (default depends on sweep)")
    ex.add_argument("--max-iters", type=int, default=None)
    ex.add_argument("--corruption-scale", type=float,
                    default=DEFAULT_CORRUPTION_SCALE)
    ex.add_argument("--noise-ratio", type=_float_list, default=None,
                    help="comma list of dense-noise ratios (noise sweep only)")
    ex.add_argument("--out", required=True, help="output directory")
    ex.set_defaults(func=_cmd_experiment)
    return p


def _cmd_gen(args) -> int:
    if args.n < 1 or not 1 <= args.r <= args.n or args.b < 1:
        print(f"odtrec gen: need n >= 1, 1 <= r <= n, b >= 1; "
              f"got n={args.n}, r={args.r}, b={args.b}", file=sys.stderr)
        return EXIT_USAGE
    inst = generate_problem(
        args.n, args.r, args.b,
        corruption_scale=args.corruption_scale, seed=args.seed,
    )
    observed = inst.observed
    if args.noise_ratio > 0.0:
        observed = add_entrywise_noise(
            observed,
            NoiseSpec(ratio=args.noise_ratio, seed=args.seed),
            reference_norm=float(np.linalg.norm(inst.clean)),
        )
    write_tensor(args.out, observed)
    write_metadata(str(args.out) + ".json", {
        "n": args.n, "r": args.r, "b": args.b, "m": None,
        "seed": args.seed,
        "corruption_scale": args.corruption_scale,
        "noise_ratio": args.noise_ratio,
        "feasibility": bounds.feasibility_flags(args.n, args.r, args.b),
        "version": __version__,
    })
    return EXIT_OK


def _cmd_recover(args) -> int:
    t = read_tensor(args.input)
    solver = SolveConfig(eps_tol=args.tol, max_iters=args.max_iters)
    cfg = PipelineConfig(
        b=args.b, r=args.r, m=args.m or None,
        stage1=solver, stage2=solver,
    )
    report = recover(t, cfg)
    write_tensor(args.out, report.recovered())
    # timings are excluded so the report bytes depend only on the input
    write_report(str(args.out) + ".json", report, include_timings=False)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    if args.kind == "region":
        n = args.n if args.n is not None else 100
        r = args.r[0] if args.r is not None else n
        res = experiment_region(
            n=n, r=r,
            b_range=args.b if args.b is not None else list(range(1, 9)),
            m_range=args.m if args.m is not None else list(range(2, 8)),
            trials=args.trials if args.trials is not None else 3,
            seed=args.seed,
            eps_tol=args.tol if args.tol is not None else 1e-6,
            max_iters=args.max_iters if args.max_iters is not None else 500,
            corruption_scale=args.corruption_scale,
        )
    elif args.kind == "iters":
        n = args.n if args.n is not None else 100
        res = experiment_iterations(
            n=n,
            b_range=args.b if args.b is not None else list(range(1, 9)),
            r_range=args.r if args.r is not None else list(range(10, n + 1, 10)),
            trials=args.trials if args.trials is not None else 10,
            seed=args.seed,
            eps_tol=args.tol if args.tol is not None else 1e-7,
            max_iters=args.max_iters if args.max_iters is not None else 500,
            corruption_scale=args.corruption_scale,
            m=args.m[0] if args.m is not None else None,
        )
    else:
        n = args.n if args.n is not None else 65
        res = experiment_noise(
            n=n,
            b=args.b[0] if args.b is not None else 5,
            r_range=args.r if args.r is not None else list(range(20, 61, 10)),
            rho_range=(args.noise_ratio if args.noise_ratio is not None
                       else [0.0, 1e-4, 1e-3, 1e-2]),
            trials=args.trials if args.trials is not None else 100,
            seed=args.seed,
            eps_tol=args.tol if args.tol is not None else 1e-12,
            max_iters=args.max_iters if args.max_iters is not None else 2000,
            corruption_scale=args.corruption_scale,
            m=args.m[0] if args.m is not None else None,
        )
    res.write(args.out)
    for name in sorted(res.paths):
        print(f"{name}: {res.paths[name]}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse finished on its own (--help/--version exit 0, usage 64)
        return int(e.code) if e.code else EXIT_OK
    try:
        return args.func(args)
    except FeasibilityError as e:
        print(f"odtrec: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConvergenceError, DegenerateInstanceError) as e:
        print(f"odtrec: did not converge: {e}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except FormatError as e:
        print(f"odtrec: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
