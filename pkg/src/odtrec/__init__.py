"""Exact recovery of orthogonally decomposable third-order tensors from
observations corrupted on a known band-structured index pattern."""

from .core import (
    BandPattern,
    DenseTensor3,
    FactorSet,
    pattern_density,
    rank1_sum,
    relative_error,
)
from .errors import (
    ConvergenceError,
    DegenerateInstanceError,
    FeasibilityError,
    FeasibilityWarning,
    FormatError,
    OdtrecError,
)
from .pipeline import PipelineConfig, RecoveryReport, recover, trusted_region_residual
from .stage1 import SolveConfig, choose_slices
from .synth import NoiseSpec, ProblemInstance, add_entrywise_noise, generate_problem

__version__ = "0.1.0"

__all__ = [
    "BandPattern",
    "ConvergenceError",
    "DegenerateInstanceError",
    "DenseTensor3",
    "FactorSet",
    "FeasibilityError",
    "FeasibilityWarning",
    "FormatError",
    "NoiseSpec",
    "OdtrecError",
    "PipelineConfig",
    "ProblemInstance",
    "RecoveryReport",
    "SolveConfig",
    "add_entrywise_noise",
    "choose_slices",
    "generate_problem",
    "pattern_density",
    "rank1_sum",
    "recover",
    "relative_error",
    "trusted_region_residual",
    "__version__",
]
