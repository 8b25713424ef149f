"""Factor extraction from corrected slices, plus third-factor solves.

With orthonormal A and B, any weighted sum of clean slices has the form
A diag(w @ C) B^T, so the two one-sided products of a pair of such sums
are both symmetric with a shared spectrum: M_a M_b^T = A diag(.) A^T and
M_a^T M_b = B diag(.) B^T.  Each factor comes from its own
eigendecomposition and the columns pair up by eigenvalue.  Eigenvector
quality degrades like 1/gap, so weights are redrawn until the selected
eigenvalues are well separated from each other and from the discarded
cluster.

Rows of the third factor come one slice at a time from the cells outside
that slice's corruption support, which are exact in the original
observations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .core import SliceMask, slice_mask
from .errors import DegenerateInstanceError


@dataclass(frozen=True)
class JennrichResult:
    A: np.ndarray
    B: np.ndarray
    eigenvalues: np.ndarray  # the r selected (signed) eigenvalues
    quality: float  # min eigenvalue separation / spread
    attempts: int


def _fix_column_signs(F: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    idx = np.argmax(np.abs(F), axis=0)
    signs = np.sign(F[idx, np.arange(F.shape[1])])
    signs[signs == 0] = 1.0
    return F * signs


def _separation(selected: np.ndarray, rest: np.ndarray) -> float:
    """Smallest gap among the selected eigenvalues and to the rest."""
    vals = np.sort(selected)
    gaps = [np.min(np.abs(selected))] if rest.size == 0 else []
    if rest.size:
        gaps.append(float(np.min(np.abs(selected[:, None] - rest[None, :]))))
    if vals.size > 1:
        gaps.append(float(np.min(np.diff(vals))))
    return min(gaps)


def jennrich(
    slices: list[np.ndarray],
    r: int,
    seed: int = 0,
    attempts: int = 5,
    accept_quality: float = 1e-4,
    floor_quality: float = 1e-8,
) -> JennrichResult:
    """Recover A and B from >= 2 clean slices by simultaneous diagonalization.

    Draws pairs of random combination weights until the symmetrized product
    has well-separated dominant eigenvalues; keeps the best attempt.
    """
    if len(slices) < 2:
        raise DegenerateInstanceError("need at least two slices for extraction")
    n = slices[0].shape[0]
    if not 1 <= r <= n:
        raise DegenerateInstanceError(f"rank {r} out of range for size {n}")
    stack = np.stack(slices)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    best = None
    for attempt in range(1, attempts + 1):
        wa = rng.standard_normal(len(slices))
        wb = rng.standard_normal(len(slices))
        Ma = np.tensordot(wa, stack, axes=(0, 0))
        Mb = np.tensordot(wb, stack, axes=(0, 0))
        K = Ma @ Mb.T
        K = 0.5 * (K + K.T)
        evals, evecs = np.linalg.eigh(K)
        order = np.argsort(-np.abs(evals))
        sel, rest = order[:r], order[r:]
        spread = float(np.max(np.abs(evals))) or 1.0
        quality = _separation(evals[sel], evals[rest]) / spread
        cand = (quality, evals[sel], evecs[:, sel], Ma, Mb)
        if best is None or quality > best[0]:
            best = cand
        if quality >= accept_quality:
            break
    quality, lam, A, Ma, Mb = best
    if quality < floor_quality:
        raise DegenerateInstanceError(
            f"eigenvalue separation {quality:.2e} below {floor_quality:.0e} "
            f"after {attempts} weight draws; instance looks degenerate"
        )
    A = _fix_column_signs(A)
    # transposed product: same spectrum, eigenvectors are the b_k; reading B
    # off A^T M_a instead would stack A's error on top of a 1/weight factor
    Kb = Ma.T @ Mb
    Kb = 0.5 * (Kb + Kb.T)
    evals_b, evecs_b = np.linalg.eigh(Kb)
    # pair columns by signed eigenvalue; min-cost assignment so far-from-clean
    # slices (where the two spectra drift apart) still yield a pairing
    _, match = scipy.optimize.linear_sum_assignment(
        np.abs(evals_b[None, :] - lam[:, None])
    )
    B = _fix_column_signs(evecs_b[:, match])
    return JennrichResult(
        A=A, B=B, eigenvalues=lam, quality=quality, attempts=attempt
    )


def jennrich_generic(slices: list[np.ndarray], r: int, seed: int = 0):
    """Textbook variant via an unsymmetric eigenproblem; independent of the
    symmetric path, used to cross-check it."""
    stack = np.stack(slices)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    Ma = np.tensordot(rng.standard_normal(len(slices)), stack, axes=(0, 0))
    Mb = np.tensordot(rng.standard_normal(len(slices)), stack, axes=(0, 0))
    K = Ma @ np.linalg.pinv(Mb, rcond=1e-10)
    evals, evecs = np.linalg.eig(K)
    order = np.argsort(-np.abs(evals))[:r]
    A = evecs[:, order]
    if np.max(np.abs(A.imag)) > 1e-6 * np.max(np.abs(A.real)):
        raise DegenerateInstanceError("complex eigenvectors in generic variant")
    A = A.real
    A /= np.linalg.norm(A, axis=0)
    return _fix_column_signs(A)


def _support_rows_cols(mask: SliceMask) -> tuple[np.ndarray, np.ndarray]:
    """0-based (rows, cols) of the corruption-support cells of one slice."""
    n, b = mask.n, mask.b
    k0 = mask.k - 1
    rows, cols = [], []
    near = np.arange(max(0, k0 - b), min(n - 1, k0 + b) + 1)
    for l0 in range(n):
        if abs(l0 - k0) <= b:
            cs = np.arange(n)
        else:
            lo, hi = max(0, l0 - b), min(n - 1, l0 + b)
            cs = np.union1d(np.arange(lo, hi + 1), near)
        rows.append(np.full(cs.size, l0))
        cols.append(cs)
    return np.concatenate(rows), np.concatenate(cols)


def solve_c_row(
    A: np.ndarray, B: np.ndarray, M: np.ndarray, mask: SliceMask
) -> np.ndarray:
    """Least-squares coefficients c with A diag(c) B^T matching M outside the
    slice's corruption support.

    Fast path: with near-orthonormal A, B the full-grid Gram is the identity,
    so the restricted Gram is I minus the support cells' contribution — a
    small downdate.  Falls back to explicit least squares if the downdated
    Gram is ill conditioned.
    """
    r = A.shape[1]
    rows, cols = _support_rows_cols(mask)
    V_u = A[rows] * B[cols]  # khatri-rao rows for support cells
    G = (A.T @ A) * (B.T @ B) - V_u.T @ V_u
    rhs = np.einsum("pk,pq,qk->k", A, M, B) - V_u.T @ M[rows, cols]
    try:
        cho = scipy.linalg.cho_factor(G, check_finite=False)
        c = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
        c += scipy.linalg.cho_solve(cho, rhs - G @ c, check_finite=False)
        return c
    except scipy.linalg.LinAlgError:
        pass
    # explicit restricted system on the complement cells
    n = mask.n
    keep = np.ones((n, n), dtype=bool)
    keep[rows, cols] = False
    pr, qc = np.nonzero(keep)
    V = A[pr] * B[qc]
    c, _, rank, _ = scipy.linalg.lstsq(
        V, M[pr, qc], lapack_driver="gelsy", check_finite=False
    )
    if rank < r:
        raise DegenerateInstanceError(
            f"third-factor solve rank deficient on slice {mask.k}"
        )
    return c


def solve_third_factor(A: np.ndarray, B: np.ndarray, observed, b: int) -> np.ndarray:
    """One row of C per slice, each from that slice's clean complement."""
    n = A.shape[0]
    C = np.empty((n, A.shape[1]))
    for k in range(1, n + 1):
        C[k - 1] = solve_c_row(A, B, observed.slice(k), slice_mask(k, b, n))
    return C


def align_columns(F_hat: np.ndarray, F_ref: np.ndarray):
    """Greedy column matching of F_hat to F_ref by |inner product|;
    returns (perm, signs) so F_hat[:, perm] * signs tracks F_ref."""
    r = F_ref.shape[1]
    overlap = np.abs(F_ref.T @ F_hat)  # (ref, hat)
    perm = np.full(r, -1)
    used = np.zeros(F_hat.shape[1], dtype=bool)
    for _ in range(r):
        j, h = np.unravel_index(
            np.argmax(np.where(used[None, :], -1.0, overlap)), overlap.shape
        )
        perm[j] = h
        used[h] = True
        overlap[j, :] = -1.0
    signs = np.array(
        [
            np.sign(F_ref[:, j] @ F_hat[:, perm[j]]) or 1.0
            for j in range(r)
        ]
    )
    return perm, signs


def factor_distance(F_hat: np.ndarray, F_ref: np.ndarray) -> float:
    """Max column 2-distance after optimal permutation and sign flips."""
    perm, signs = align_columns(F_hat, F_ref)
    aligned = F_hat[:, perm] * signs[None, :]
    return float(np.max(np.linalg.norm(aligned - F_ref, axis=0)))
