"""Seeded generation of ground-truth instances.

One 64-bit seed drives fixed, independent substreams (A, B, C, corruption,
extra noise) so that regenerating any piece is reproducible no matter what
else was drawn.  Substreams are numpy SeedSequences with a fixed spawn key
per role.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BandPattern, FactorSet, rank1_sum

# substream labels; order is part of the on-disk reproducibility contract
_STREAM_A, _STREAM_B, _STREAM_C, _STREAM_E, _STREAM_NOISE = range(5)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def _orthonormal(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """QR-orthonormalized Gaussian matrix, sign-fixed so it is unique."""
    g = rng.standard_normal((n, r))
    q, rr = np.linalg.qr(g)
    signs = np.sign(np.diag(rr))
    signs[signs == 0] = 1.0
    return q * signs


def random_orthonormal_pair(n: int, r: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Independent n x r matrices with orthonormal columns."""
    if r > n:
        raise ValueError(f"r={r} exceeds n={n}")
    return _orthonormal(n, r, _rng(seed, _STREAM_A)), _orthonormal(n, r, _rng(seed, _STREAM_B))


@dataclass(frozen=True)
class NoiseSpec:
    """Dense perturbation at a prescribed relative magnitude."""

    ratio: float
    seed: int


@dataclass(frozen=True)
class ProblemInstance:
    factors: FactorSet
    clean: np.ndarray       # (n, n, n) rank-r ground truth
    corruption: np.ndarray  # supported on the band pattern
    observed: np.ndarray    # clean + corruption
    n: int
    r: int
    b: int
    seed: int
    corruption_scale: float


def generate_problem(
    n: int,
    r: int,
    b: int,
    corruption_scale: float = 1.0,
    seed: int = 0,
) -> ProblemInstance:
    """Draw an instance: orthonormal A, B; Gaussian C; Gaussian corruption
    of the given scale placed exactly on the band pattern."""
    if r > n:
        raise ValueError(f"r={r} exceeds n={n}")
    A, B = random_orthonormal_pair(n, r, seed)
    C = _rng(seed, _STREAM_C).standard_normal((n, r))
    factors = FactorSet(A=A, B=B, C=C)
    clean = rank1_sum(factors)

    E = _rng(seed, _STREAM_E).standard_normal((n, n, n))
    E *= corruption_scale
    E[~BandPattern(n=n, b=b).mask3d()] = 0.0

    return ProblemInstance(
        factors=factors,
        clean=clean,
        corruption=E,
        observed=clean + E,
        n=n,
        r=r,
        b=b,
        seed=seed,
        corruption_scale=corruption_scale,
    )


def add_entrywise_noise(t: np.ndarray, spec: NoiseSpec, reference_norm: float) -> np.ndarray:
    """Add iid Gaussian noise rescaled so ||noise|| = ratio * reference_norm.

    ratio 0 returns an unmodified copy.
    """
    if spec.ratio < 0:
        raise ValueError("noise ratio must be >= 0")
    out = np.array(t, dtype=np.float64, copy=True)
    if spec.ratio == 0:
        return out
    g = _rng(spec.seed, _STREAM_NOISE).standard_normal(out.shape)
    g *= spec.ratio * reference_norm / np.linalg.norm(g)
    out += g
    return out
