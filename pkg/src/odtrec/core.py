"""Dense third-order tensors, banded index patterns, and per-slice masks.

Conventions
-----------
All public index arguments are 1-based, matching the way the recovery
equations are usually written down.  Internally everything is 0-based numpy.
A cubical tensor t has entries t(i, j, l) with each index in [1, n]; its
canonical serialized layout runs the first index fastest and the third
slowest (column-major over the flattened cube).

Masks are kept as predicates plus derived index lists.  No public type
stores an n x n boolean array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError


def index_band(k: int, b: int, n: int) -> np.ndarray:
    """1-based indices in [max(1, k-b), min(n, k+b)], as a sorted int array."""
    if not (1 <= k <= n):
        raise ValueError(f"k={k} out of range [1, {n}]")
    if b < 0:
        raise ValueError("b must be >= 0")
    return np.arange(max(1, k - b), min(n, k + b) + 1, dtype=np.int64)


def in_diag_band(i: int, j: int, b: int) -> bool:
    return abs(i - j) <= b


@dataclass(frozen=True)
class DiagBand:
    """Membership predicate for {(i, j) in [1,n]^2 : |i - j| <= b}."""

    b: int
    n: int

    def contains(self, i: int, j: int) -> bool:
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            return False
        return abs(i - j) <= self.b

    def __contains__(self, ij) -> bool:
        return self.contains(*ij)

    def count(self) -> int:
        # full band minus the clipped triangular corners
        b, n = self.b, self.n
        return n * (2 * b + 1) - b * (b + 1)


def diag_band(b: int, n: int) -> DiagBand:
    return DiagBand(b=b, n=n)


@dataclass(frozen=True)
class BandPattern:
    """Corruption support: triples where some pair of indices is within b.

    (i1, i2, i3) belongs to the pattern iff |i1-i2| <= b or |i1-i3| <= b
    or |i2-i3| <= b.  Invariant under permuting the three indices.
    """

    n: int
    b: int

    def contains(self, i1: int, i2: int, i3: int) -> bool:
        b = self.b
        return abs(i1 - i2) <= b or abs(i1 - i3) <= b or abs(i2 - i3) <= b

    def mask3d(self) -> np.ndarray:
        """Boolean cube of the pattern (internal/bulk use only)."""
        idx = np.arange(self.n)
        d12 = np.abs(idx[:, None] - idx[None, :]) <= self.b
        return (
            d12[:, :, None]
            | d12[:, None, :]
            | d12[None, :, :]
        )


def pattern_density(pattern: BandPattern) -> float:
    """Exact fraction of [1,n]^3 covered by the pattern."""
    cnt = int(pattern.mask3d().sum())
    return cnt / pattern.n**3


@dataclass(frozen=True)
class SliceMask:
    """Support of the unknown-corruption region U(k) for slice k.

    A cell (i, j) is in U(k) iff |i - j| <= b, or i is within b of k,
    or j is within b of k.  The complement is where the slice equations
    are trusted.
    """

    n: int
    k: int
    b: int

    def contains(self, i: int, j: int) -> bool:
        b, k = self.b, self.k
        return abs(i - j) <= b or abs(i - k) <= b or abs(j - k) <= b

    def complement_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based (rows, cols) of cells outside U(k), row-major order."""
        n, b, k0 = self.n, self.b, self.k - 1
        idx = np.arange(n)
        near_k = np.abs(idx - k0) <= b
        keep1d = ~near_k
        grid = keep1d[:, None] & keep1d[None, :]
        grid &= np.abs(idx[:, None] - idx[None, :]) > b
        return np.nonzero(grid)

    def row_support0(self, l0: int) -> np.ndarray:
        """0-based columns allowed in row l0+1: the diagonal cell block
        plus the columns within b of k."""
        n, b, k0 = self.n, self.b, self.k - 1
        lo, hi = max(0, l0 - b), min(n - 1, l0 + b)
        cols = set(range(lo, hi + 1))
        cols.update(range(max(0, k0 - b), min(n - 1, k0 + b) + 1))
        return np.fromiter(sorted(cols), dtype=np.int64)


def slice_mask(k: int, b: int, n: int) -> SliceMask:
    return SliceMask(n=n, k=k, b=b)


@dataclass(frozen=True)
class DenseTensor3:
    """Cubical dense tensor with float64 entries."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or len(set(d.shape)) != 1:
            raise FormatError(f"expected a cubical 3-way array, got shape {d.shape}")
        object.__setattr__(self, "data", d)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def slice(self, l: int) -> np.ndarray:
        """Mode-3 slice: the n x n matrix M with M(i, j) = t(i, j, l)."""
        if not (1 <= l <= self.n):
            raise ValueError(f"slice index {l} out of range [1, {self.n}]")
        return self.data[:, :, l - 1]

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def to_flat(self) -> np.ndarray:
        """Canonical flat layout: first index fastest, third slowest."""
        return self.data.ravel(order="F")

    @classmethod
    def from_flat(cls, flat: np.ndarray, n: int) -> "DenseTensor3":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != n**3:
            raise FormatError(f"payload holds {flat.size} values, expected {n**3}")
        return cls(flat.reshape((n, n, n), order="F"))


def slice_as_matrix(t: DenseTensor3 | np.ndarray, l: int) -> np.ndarray:
    if isinstance(t, DenseTensor3):
        return t.slice(l)
    return np.asarray(t, dtype=np.float64)[:, :, l - 1]


@dataclass(frozen=True)
class FactorSet:
    """CP factors A, B, C (each n x r); columns of A and B orthonormal."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def r(self) -> int:
        return self.A.shape[1]

    def validate(self, atol: float = 1e-10) -> None:
        """Check orthonormality of the columns of A and B (max-abs)."""
        for name, F in (("A", self.A), ("B", self.B)):
            gram = F.T @ F
            err = np.max(np.abs(gram - np.eye(F.shape[1])))
            if err > atol:
                raise ValueError(f"columns of {name} not orthonormal: max dev {err:.3e}")


def rank1_sum(factors: FactorSet) -> np.ndarray:
    """Sum of outer products a_k (x) b_k (x) c_k as an (n, n, n) array."""
    return np.einsum("ik,jk,lk->ijl", factors.A, factors.B, factors.C)


def frobenius_norm(x: np.ndarray | DenseTensor3) -> float:
    if isinstance(x, DenseTensor3):
        return x.norm()
    return float(np.linalg.norm(np.asarray(x)))


def inner_product(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.vdot(np.asarray(x), np.asarray(y)))


def relative_error(est: np.ndarray | DenseTensor3, ref: np.ndarray | DenseTensor3) -> float:
    """||est - ref||_F / ||ref||_F."""
    e = est.data if isinstance(est, DenseTensor3) else np.asarray(est)
    r = ref.data if isinstance(ref, DenseTensor3) else np.asarray(ref)
    return float(np.linalg.norm(e - r) / np.linalg.norm(r))


def restrict_to_complement(M: np.ndarray, mask) -> np.ndarray:
    """Entries of M at cells outside the mask, in row-major cell order.

    The mask must expose complement_cells() -> (rows0, cols0).
    """
    rows, cols = mask.complement_cells()
    return np.asarray(M)[rows, cols]
