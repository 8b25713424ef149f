"""End-to-end recovery: feasibility gate, two correction stages, factor
extraction, and per-slice third-factor solves.

The final self-check needs no ground truth: cells outside the corruption
pattern are exact in the observations, so the relative misfit of the
recovered tensor on that region measures success directly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import bounds
from .core import BandPattern, DenseTensor3, FactorSet, rank1_sum
from .errors import ConvergenceError
from .spectral import jennrich, solve_third_factor
from .stage1 import SliceSystem, SolveConfig, als_stage1, choose_slices
from .stage2 import Stage2System, als_stage2, default_subset, SubsetSelection


@dataclass(frozen=True)
class PipelineConfig:
    """Everything recover() needs besides the observations."""

    b: int
    r: int
    m: int | None = None
    subset: tuple[int, ...] | None = None  # 1-based ordinals into the schedule
    stage1: SolveConfig = field(default_factory=SolveConfig)
    stage2: SolveConfig = field(default_factory=SolveConfig)
    extraction_seed: int = 0
    extraction_attempts: int = 5
    require_counts: bool = True  # refuse globally underdetermined schedules


@dataclass
class RecoveryReport:
    n: int
    r: int
    b: int
    m: int
    ks: tuple[int, ...]
    subset_ordinals: tuple[int, ...]
    stage1_iterations: int
    stage1_converged: bool
    stage1_residuals: list[float]
    stage2_iterations: int
    stage2_converged: bool
    stage2_residuals: list[float]
    extraction_quality: float
    extraction_attempts: int
    eigenvalues: list[float]
    factors: FactorSet
    trusted_residual: float
    feasibility: dict[str, bool]
    warnings: tuple[str, ...]
    timings: dict[str, float]
    stage1_row_log: list[float] | None = None
    stage2_row_log: list[float] | None = None

    def recovered(self) -> DenseTensor3:
        return DenseTensor3(rank1_sum(self.factors))

    def to_dict(self, include_timings: bool = True) -> dict:
        d = asdict(self)
        d["factors"] = {
            "A": self.factors.A.tolist(),
            "B": self.factors.B.tolist(),
            "C": self.factors.C.tolist(),
        }
        d["ks"] = list(self.ks)
        d["subset_ordinals"] = list(self.subset_ordinals)
        d["warnings"] = list(self.warnings)
        if not include_timings:
            del d["timings"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RecoveryReport":
        d = dict(d)
        f = d["factors"]
        d["factors"] = FactorSet(
            A=np.array(f["A"]), B=np.array(f["B"]), C=np.array(f["C"])
        )
        d["ks"] = tuple(d["ks"])
        d["subset_ordinals"] = tuple(d["subset_ordinals"])
        d["warnings"] = tuple(d["warnings"])
        d.setdefault("timings", {})
        return cls(**d)


def trusted_region_residual(
    recovered: np.ndarray, observed: np.ndarray, b: int
) -> float:
    """Relative misfit on the cells the corruption pattern cannot touch."""
    n = observed.shape[0]
    clean = ~BandPattern(n=n, b=b).mask3d()
    ref = float(np.linalg.norm(observed[clean]))
    diff = float(np.linalg.norm(recovered[clean] - observed[clean]))
    return diff / ref if ref > 0 else diff


def recover(
    observed: DenseTensor3 | np.ndarray, config: PipelineConfig
) -> RecoveryReport:
    t = observed if isinstance(observed, DenseTensor3) else DenseTensor3(observed)
    n = t.n
    feas = bounds.check_instance(n, config.r, config.b, config.m)
    bounds.warn_all(feas)
    if config.require_counts:
        te = bounds.total_equations(n, config.b, feas.m)
        tu = bounds.total_unknowns(n, config.b, feas.m)
        if te < tu:
            from .errors import FeasibilityError

            raise FeasibilityError(
                f"stage-1 system is underdetermined at n={n}, b={config.b}, "
                f"m={feas.m}: {te} equations for {tu} unknowns"
            )

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    selection = choose_slices(n, config.b, feas.m)
    system = SliceSystem.from_observations(t, selection)
    timings["setup"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    s1 = als_stage1(system, config.stage1)
    timings["stage1"] = time.perf_counter() - t0
    if not s1.converged:
        raise ConvergenceError(
            f"stage 1 exhausted {config.stage1.max_iters} sweeps "
            f"(relative residual {s1.residual_history[-1]:.3e})"
        )

    corrected = [system.M[i] - s1.X[i] for i in range(selection.m)]

    if config.subset is not None:
        sub = SubsetSelection(selection=selection, ordinals=tuple(config.subset))
        from .stage2 import _check_disjoint

        _check_disjoint(sub)
    else:
        sub = default_subset(selection)
    sys2 = Stage2System(subset=sub, G=[corrected[i - 1] for i in sub.ordinals])

    t0 = time.perf_counter()
    s2 = als_stage2(sys2, config.stage2)
    timings["stage2"] = time.perf_counter() - t0
    if not s2.converged:
        raise ConvergenceError(
            f"stage 2 exhausted {config.stage2.max_iters} sweeps "
            f"(relative residual {s2.residual_history[-1]:.3e})"
        )

    clean_slices = [sys2.G[i] - s2.X[i] for i in range(sys2.nslices)]

    t0 = time.perf_counter()
    ext = jennrich(
        clean_slices,
        config.r,
        seed=config.extraction_seed,
        attempts=config.extraction_attempts,
    )
    timings["extraction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    C = solve_third_factor(ext.A, ext.B, t, config.b)
    timings["third_factor"] = time.perf_counter() - t0

    factors = FactorSet(A=ext.A, B=ext.B, C=C)
    t0 = time.perf_counter()
    rec = rank1_sum(factors)
    trusted = trusted_region_residual(rec, t.data, config.b)
    timings["assembly"] = time.perf_counter() - t0

    return RecoveryReport(
        n=n,
        r=config.r,
        b=config.b,
        m=selection.m,
        ks=selection.ks,
        subset_ordinals=sub.ordinals,
        stage1_iterations=s1.iterations,
        stage1_converged=s1.converged,
        stage1_residuals=list(s1.residual_history),
        stage2_iterations=s2.iterations,
        stage2_converged=s2.converged,
        stage2_residuals=list(s2.residual_history),
        extraction_quality=ext.quality,
        extraction_attempts=ext.attempts,
        eigenvalues=[float(v) for v in ext.eigenvalues],
        factors=factors,
        trusted_residual=trusted,
        feasibility=bounds.feasibility_flags(n, config.r, config.b),
        warnings=feas.warnings,
        timings=timings,
        stage1_row_log=s1.row_residual_log,
        stage2_row_log=None,
    )
