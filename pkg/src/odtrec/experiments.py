"""Benchmark sweeps: recovery region over (b, m), stage-1 iteration counts
over (b, r), and noise sensitivity over (noise ratio, r).

Every sweep writes the same file family: a per-trial CSV, an aggregated
per-cell CSV, a graymap heatmap of the aggregate, and a JSON metadata
sidecar.  All output bytes are a pure function of the arguments; per-trial
seeds are split off the experiment seed, never drawn from global state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .core import relative_error
from .errors import ConvergenceError, DegenerateInstanceError, FeasibilityError
from . import bounds
from .fileio import write_csv, write_metadata, write_pgm
from .pipeline import PipelineConfig, recover
from .stage1 import SliceSystem, SolveConfig, als_stage1, choose_slices
from .synth import NoiseSpec, add_entrywise_noise, generate_problem

# relative tensor error below which a trial counts as recovered
SUCCESS_THRESHOLD = 1e-6

# default corruption magnitude: large enough that untreated corruption is
# catastrophic, so successes demonstrate exactness rather than robustness
DEFAULT_CORRUPTION_SCALE = 1e3


def trial_seed(seed: int, *cell: int) -> int:
    """Independent seed for one (experiment, cell, trial) coordinate."""
    key = tuple(int(c) for c in cell)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentResult:
    name: str
    header: list[str]
    rows: list[tuple]
    agg_header: list[str]
    agg_rows: list[tuple]
    heatmap: np.ndarray
    meta: dict
    paths: dict[str, str] = field(default_factory=dict)

    def write(self, out_dir: str | Path) -> "ExperimentResult":
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "trials": out / f"{self.name}_trials.csv",
            "cells": out / f"{self.name}_cells.csv",
            "heatmap": out / f"{self.name}.pgm",
            "metadata": out / f"{self.name}_meta.json",
        }
        write_csv(files["trials"], self.header, self.rows)
        write_csv(files["cells"], self.agg_header, self.agg_rows)
        write_pgm(files["heatmap"], self.heatmap)
        write_metadata(files["metadata"], self.meta)
        self.paths = {k: str(v) for k, v in files.items()}
        return self


def _fmt(x: float) -> str:
    return str(float(x))


def _solver(eps_tol: float, max_iters: int) -> SolveConfig:
    return SolveConfig(eps_tol=eps_tol, max_iters=max_iters)


def _counts_ok(n: int, b: int, m: int) -> bool:
    return bounds.total_equations(n, b, m) >= bounds.total_unknowns(n, b, m)


def experiment_region(
    n: int,
    r: int,
    b_range: Sequence[int],
    m_range: Sequence[int],
    trials: int = 3,
    seed: int = 0,
    eps_tol: float = 1e-6,
    max_iters: int = 500,
    corruption_scale: float = DEFAULT_CORRUPTION_SCALE,
) -> ExperimentResult:
    """Success/failure of full recovery on the (b, m) grid at fixed n, r.

    A trial succeeds when the relative tensor error is below
    SUCCESS_THRESHOLD; geometrically inadmissible cells are marked
    infeasible without running.  Heatmap: brightness = success rate.
    """
    header = [
        "b", "m", "trial", "seed", "status", "rel_error",
        "stage1_iterations", "stage2_iterations",
    ]
    rows: list[tuple] = []
    agg_rows: list[tuple] = []
    grid = np.zeros((len(b_range), len(m_range)))
    for bi, b in enumerate(b_range):
        for mi, m in enumerate(m_range):
            n_succ = n_inf = 0
            errs: list[float] = []
            for t in range(trials):
                ts = trial_seed(seed, 0, b, m, t)
                status, err, it1, it2 = _region_trial(
                    n, r, b, m, ts, eps_tol, max_iters, corruption_scale
                )
                if status == "success":
                    n_succ += 1
                elif status == "infeasible":
                    n_inf += 1
                if err is not None:
                    errs.append(err)
                rows.append(
                    (b, m, t, ts, status,
                     _fmt(err) if err is not None else "",
                     it1 if it1 is not None else "",
                     it2 if it2 is not None else "")
                )
            rate = n_succ / trials
            grid[bi, mi] = rate
            agg_rows.append(
                (b, m, trials, n_succ, n_inf, _fmt(rate),
                 _fmt(float(np.mean(errs))) if errs else "")
            )
    meta = {
        "experiment": "region",
        "n": n, "r": r,
        "b_range": [int(b) for b in b_range],
        "m_range": [int(m) for m in m_range],
        "trials": trials, "seed": seed,
        "eps_tol": eps_tol, "max_iters": max_iters,
        "corruption_scale": corruption_scale,
        "success_threshold": SUCCESS_THRESHOLD,
        "version": __version__,
    }
    return ExperimentResult(
        name="region",
        header=header,
        rows=rows,
        agg_header=["b", "m", "trials", "successes", "infeasible",
                    "success_rate", "mean_error"],
        agg_rows=agg_rows,
        heatmap=np.rint(255.0 * grid),
        meta=meta,
    )


def _region_trial(n, r, b, m, ts, eps_tol, max_iters, corruption_scale):
    try:
        bounds.check_instance(n, r, b, m)
        if not _counts_ok(n, b, m):
            return "infeasible", None, None, None
    except FeasibilityError:
        return "infeasible", None, None, None
    inst = generate_problem(n, r, b, corruption_scale=corruption_scale, seed=ts)
    cfg = PipelineConfig(
        b=b, r=r, m=m,
        stage1=_solver(eps_tol, max_iters),
        stage2=_solver(eps_tol, max_iters),
    )
    try:
        rep = recover(inst.observed, cfg)
    except FeasibilityError:
        return "infeasible", None, None, None
    except (ConvergenceError, DegenerateInstanceError):
        return "failure", None, None, None
    err = relative_error(rep.recovered(), inst.clean)
    status = "success" if err < SUCCESS_THRESHOLD else "failure"
    return status, err, rep.stage1_iterations, rep.stage2_iterations


def experiment_iterations(
    n: int,
    b_range: Sequence[int],
    r_range: Sequence[int],
    trials: int = 10,
    seed: int = 0,
    eps_tol: float = 1e-7,
    max_iters: int = 500,
    corruption_scale: float = DEFAULT_CORRUPTION_SCALE,
    m: int | None = None,
) -> ExperimentResult:
    """Mean stage-1 sweep counts on the (b, r) grid at fixed n.

    Only stage 1 runs: the sweep count is its convergence statistic.
    Heatmap: darkness grows with the mean sweep count.
    """
    header = [
        "b", "r", "trial", "seed", "status",
        "stage1_iterations", "converged", "final_residual",
    ]
    rows: list[tuple] = []
    agg_rows: list[tuple] = []
    grid = np.zeros((len(b_range), len(r_range)))
    for bi, b in enumerate(b_range):
        for ri, r in enumerate(r_range):
            counts: list[int] = []
            n_conv = 0
            for t in range(trials):
                ts = trial_seed(seed, 1, b, r, t)
                row, iters, conv = _iterations_trial(
                    n, r, b, m, ts, eps_tol, max_iters, corruption_scale
                )
                rows.append((b, r, t, ts) + row)
                if iters is not None:
                    counts.append(iters)
                    n_conv += int(conv)
            mean_it = float(np.mean(counts)) if counts else float("nan")
            grid[bi, ri] = mean_it if counts else 0.0
            agg_rows.append(
                (b, r, trials, len(counts), n_conv,
                 _fmt(mean_it) if counts else "")
            )
    top = float(np.nanmax(grid)) if np.any(grid > 0) else 1.0
    heat = 255.0 * (1.0 - grid / max(top, 1.0))
    meta = {
        "experiment": "iterations",
        "n": n,
        "b_range": [int(b) for b in b_range],
        "r_range": [int(r) for r in r_range],
        "m": m, "trials": trials, "seed": seed,
        "eps_tol": eps_tol, "max_iters": max_iters,
        "corruption_scale": corruption_scale,
        "version": __version__,
    }
    return ExperimentResult(
        name="iterations",
        header=header,
        rows=rows,
        agg_header=["b", "r", "trials", "completed", "converged",
                    "mean_iterations"],
        agg_rows=agg_rows,
        heatmap=np.rint(heat),
        meta=meta,
    )


def _iterations_trial(n, r, b, m, ts, eps_tol, max_iters, corruption_scale):
    try:
        feas = bounds.check_instance(n, r, b, m)
        if not _counts_ok(n, b, feas.m):
            return ("infeasible", "", "", ""), None, None
    except FeasibilityError:
        return ("infeasible", "", "", ""), None, None
    inst = generate_problem(n, r, b, corruption_scale=corruption_scale, seed=ts)
    selection = choose_slices(n, b, feas.m)
    system = SliceSystem.from_observations(inst.observed, selection)
    try:
        res = als_stage1(system, _solver(eps_tol, max_iters))
    except DegenerateInstanceError:
        return ("degenerate", "", "", ""), None, None
    return (
        ("ok", res.iterations, res.converged, _fmt(res.residual_history[-1])),
        res.iterations,
        res.converged,
    )


def experiment_noise(
    n: int,
    b: int,
    r_range: Sequence[int],
    rho_range: Sequence[float],
    trials: int = 100,
    seed: int = 0,
    eps_tol: float = 1e-12,
    max_iters: int = 2000,
    corruption_scale: float = DEFAULT_CORRUPTION_SCALE,
    m: int | None = None,
) -> ExperimentResult:
    """Mean relative recovery error on the (noise ratio, r) grid.

    On top of the structured corruption, dense noise of Frobenius norm
    rho * ||clean|| is added everywhere, so recovery can only be
    approximate for rho > 0.  Trials are paired across rho: the instance
    and the noise direction are fixed per (r, trial) and only the noise
    magnitude changes, which isolates the rho-dependence.  The equation
    count gate is disabled: count-deficient geometries run anyway and
    simply report their (large) errors.  Heatmap: brightness =
    -log10(mean error) / 8.
    """
    header = [
        "rho", "r", "trial", "seed", "noise_seed", "status", "rel_error",
    ]
    rows: list[tuple] = []
    agg_rows: list[tuple] = []
    grid = np.zeros((len(rho_range), len(r_range)))
    for pi, rho in enumerate(rho_range):
        for ri, r in enumerate(r_range):
            errs: list[float] = []
            for t in range(trials):
                ts = trial_seed(seed, 2, ri, t)
                ns = trial_seed(seed, 3, ri, t)
                status, err = _noise_trial(
                    n, r, b, m, float(rho), ts, ns,
                    eps_tol, max_iters, corruption_scale,
                )
                if err is not None:
                    errs.append(err)
                rows.append(
                    (_fmt(rho), r, t, ts, ns, status,
                     _fmt(err) if err is not None else "")
                )
            mean_err = float(np.mean(errs)) if errs else float("nan")
            grid[pi, ri] = mean_err if errs else float("nan")
            agg_rows.append(
                (_fmt(rho), r, trials, len(errs),
                 _fmt(mean_err) if errs else "")
            )
    with np.errstate(divide="ignore", invalid="ignore"):
        bright = np.clip(-np.log10(grid) / 8.0, 0.0, 1.0)
    bright = np.where(np.isfinite(bright), bright, 0.0)
    meta = {
        "experiment": "noise",
        "n": n, "b": b,
        "r_range": [int(r) for r in r_range],
        "rho_range": [float(x) for x in rho_range],
        "m": m, "trials": trials, "seed": seed,
        "eps_tol": eps_tol, "max_iters": max_iters,
        "corruption_scale": corruption_scale,
        "version": __version__,
    }
    return ExperimentResult(
        name="noise",
        header=header,
        rows=rows,
        agg_header=["rho", "r", "trials", "completed", "mean_error"],
        agg_rows=agg_rows,
        heatmap=np.rint(255.0 * bright),
        meta=meta,
    )


def _noise_trial(n, r, b, m, rho, ts, ns, eps_tol, max_iters, corruption_scale):
    inst = generate_problem(n, r, b, corruption_scale=corruption_scale, seed=ts)
    ref = float(np.linalg.norm(inst.clean))
    observed = add_entrywise_noise(
        inst.observed, NoiseSpec(ratio=rho, seed=ns), reference_norm=ref
    )
    cfg = PipelineConfig(
        b=b, r=r, m=m,
        stage1=_solver(eps_tol, max_iters),
        stage2=_solver(eps_tol, max_iters),
        require_counts=False,
    )
    try:
        rep = recover(observed, cfg)
    except FeasibilityError:
        return "infeasible", None
    except (ConvergenceError, DegenerateInstanceError):
        return "failure", None
    return "ok", relative_error(rep.recovered(), inst.clean)
