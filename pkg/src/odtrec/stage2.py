"""Stage 2: recover the corruption rows near each distinguished slice.

After stage 1 the i-th corrected slice G_i is exact outside the rows within
2b of k_i.  Working over a subset I of slices whose 2b-neighborhoods are
pairwise disjoint, the remaining corruption X_i (supported on those rows,
inside U(k_i)) satisfies

    X_i^T G_j - G_j^T X_i + G_i^T X_j - X_j^T G_i = G_i^T G_j - G_j^T G_i

for i != j in I, with no mask: the quadratic cross terms X_i^T X_j vanish
identically because the row supports are disjoint, so the system is exactly
linear.  It is the transposed twin of the stage-1 system, and is solved by
the mirrored scheme: exact least-squares updates of one column of one X_i
at a time (a column appears only in its own row/column of the residual).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInstanceError, FeasibilityError
from .stage1 import SliceSelection, SolveConfig


@dataclass(frozen=True)
class SubsetSelection:
    """Slices used for stage 2: 1-based ordinals into the stage-1 selection."""

    selection: SliceSelection
    ordinals: tuple[int, ...]

    @property
    def ks(self) -> tuple[int, ...]:
        return tuple(self.selection.ks[i - 1] for i in self.ordinals)


def default_subset(selection: SliceSelection) -> SubsetSelection:
    """Alternating slices 1, 3, 5, ...; their 2b-neighborhoods are disjoint
    because consecutive picks are 2(2b+1) apart."""
    ordinals = tuple(range(1, selection.m + 1, 2))
    if len(ordinals) < 3:
        raise FeasibilityError(
            f"stage 2 needs at least 3 slices with disjoint neighborhoods; "
            f"only {len(ordinals)} available from m={selection.m}"
        )
    sub = SubsetSelection(selection=selection, ordinals=ordinals)
    _check_disjoint(sub)
    return sub


def _check_disjoint(sub: SubsetSelection) -> None:
    b, n = sub.selection.b, sub.selection.n
    ks = sub.ks
    for a, kb in zip(ks, ks[1:]):
        if min(n, a + 2 * b) >= max(1, kb - 2 * b):
            raise FeasibilityError(
                f"2b-neighborhoods of slices {a} and {kb} overlap; "
                "pick a sparser subset"
            )


@dataclass(eq=False)
class Stage2System:
    """Corrected slices for the chosen subset plus unknown-support data."""

    subset: SubsetSelection
    G: list[np.ndarray]  # one corrected slice per subset ordinal
    rows0: list[np.ndarray] = field(init=False)
    col_support0: list[dict[int, np.ndarray]] = field(init=False)
    Cs: dict[tuple[int, int], np.ndarray] = field(init=False)
    rhs_norm: float = field(init=False)
    rhs_noise: float = field(init=False)

    def __post_init__(self):
        sel = self.subset.selection
        n, b = sel.n, sel.b
        ks = self.subset.ks
        if len(self.G) != len(ks):
            raise ValueError("one corrected slice per subset entry required")
        # overlapping 2b-neighborhoods would reintroduce the quadratic terms
        _check_disjoint(self.subset)
        self.rows0 = []
        self.col_support0 = []
        idx = np.arange(n)
        for k in ks:
            k0 = k - 1
            wide = idx[np.abs(idx - k0) <= 2 * b]
            narrow = wide[np.abs(wide - k0) <= b]
            self.rows0.append(wide)
            support = {}
            for p0 in range(n):
                if abs(p0 - k0) <= b:
                    support[p0] = wide
                else:
                    extra = wide[np.abs(wide - p0) <= b]
                    support[p0] = np.unique(np.concatenate([narrow, extra]))
            self.col_support0.append(support)
        self.Cs = {}
        sq = 0.0
        noise_sq = 0.0
        s = len(ks)
        for i in range(s):
            for j in range(i + 1, s):
                P = self.G[i].T @ self.G[j]
                self.Cs[(i, j)] = P - P.T
                sq += float(np.sum(self.Cs[(i, j)] ** 2))
                # float-noise level of the constant term (see stage 1)
                A = np.abs(self.G[i]).T @ np.abs(self.G[j])
                noise_sq += float(np.sum((A + A.T) ** 2))
        self.rhs_norm = float(np.sqrt(sq))
        self.rhs_noise = float(np.finfo(np.float64).eps * np.sqrt(noise_sq))

    @property
    def n(self) -> int:
        return self.subset.selection.n

    @property
    def nslices(self) -> int:
        return len(self.G)


@dataclass
class Stage2Result:
    X: list[np.ndarray]
    iterations: int
    converged: bool
    residual_history: list[float]


def _residual_matrices(system: Stage2System, X: list[np.ndarray]) -> dict:
    R = {}
    for (i, j), Cs in system.Cs.items():
        Z = X[i].T @ system.G[j] + system.G[i].T @ X[j]
        R[(i, j)] = (Z - Z.T) - Cs
    return R


def _restricted_vector(system: Stage2System, R: dict) -> np.ndarray:
    return np.concatenate([R[key].ravel() for key in sorted(R)])


def _apply_linear(system: Stage2System, D: list[np.ndarray]) -> np.ndarray:
    """Homogeneous part of the residual at corruption candidate D
    (same entry order as _restricted_vector)."""
    parts = []
    for i, j in sorted(system.Cs):
        Z = D[i].T @ system.G[j] + system.G[i].T @ D[j]
        parts.append((Z - Z.T).ravel())
    return np.concatenate(parts)


class _ColPlan:
    """One column's least-squares operator, factored once.

    The stacked design depends only on the corrected slices, so its
    pseudoinverse is reusable across every sweep.
    """

    __slots__ = ("i", "p0", "T", "q", "parts", "pinv")

    def __init__(self, system: Stage2System, i: int, p0: int):
        n, s = system.n, system.nslices
        self.i = i
        self.p0 = p0
        self.T = system.col_support0[i][p0]
        self.q = np.concatenate(
            [np.arange(p0, dtype=np.int64), np.arange(p0 + 1, n, dtype=np.int64)]
        )
        self.parts = []
        blocks = []
        for j in range(s):
            if j == i:
                continue
            key = (i, j) if i < j else (j, i)
            sign = 1.0 if i < j else -1.0
            D = system.G[j][self.T][:, self.q].T
            self.parts.append((key, sign, D))
            blocks.append(D)
        stacked = np.vstack(blocks) if len(blocks) > 1 else blocks[0]
        u, sv, vt = np.linalg.svd(stacked, full_matrices=False)
        cut = sv[0] * max(stacked.shape) * np.finfo(np.float64).eps if sv.size else 0.0
        if sv.size < self.T.size or sv[-1] <= cut:
            raise DegenerateInstanceError(
                f"rank-deficient column subproblem (subset slice {i + 1}, "
                f"column {p0 + 1}): try a smaller b or a different seed"
            )
        self.pinv = (vt.T / sv) @ u.T


def als_stage2(system: Stage2System, cfg: SolveConfig | None = None) -> Stage2Result:
    """Column-wise Gauss-Seidel least squares; exact column solves keep the
    global residual non-increasing.  Between sweeps the same safeguarded
    extrapolation as stage 1 shortcuts the geometric tail."""
    if cfg is None:
        cfg = SolveConfig()
    n, s = system.n, system.nslices
    X = [np.zeros((n, n)) for _ in range(s)]
    plans = [_ColPlan(system, i, p0) for i in range(s) for p0 in range(n)]
    R = _residual_matrices(system, X)
    norms_sq = {key: float(np.sum(mat**2)) for key, mat in R.items()}

    floor_abs = 50.0 * system.rhs_noise
    denom = max(system.rhs_norm, floor_abs)

    def logged() -> float:
        return float(np.sqrt(max(0.0, sum(norms_sq.values()))) / denom)

    history = [logged()]
    converged = history[0] * denom <= floor_abs
    iters = 0
    dirs: list[list[np.ndarray]] = []
    ldirs: list[np.ndarray] = []

    while not converged and iters < cfg.max_iters:
        prev_X = [Xi.copy() for Xi in X] if cfg.accel_depth > 0 else None
        for plan in plans:
            Xi = X[plan.i]
            p0, T, q = plan.p0, plan.T, plan.q
            rhs_parts = [
                D @ Xi[T, p0] - sign * R[key][p0, q]
                for key, sign, D in plan.parts
            ]
            rhs = np.concatenate(rhs_parts) if len(rhs_parts) > 1 else rhs_parts[0]
            y = plan.pinv @ rhs
            Xi[T, p0] = y
            off = 0
            for key, sign, D in plan.parts:
                vals = D @ y - rhs[off: off + q.size]
                off += q.size
                old = R[key][p0, q]
                norms_sq[key] += 2.0 * (float(vals @ vals) - float(old @ old))
                R[key][p0, q] = sign * vals
                R[key][q, p0] = -sign * vals
        iters += 1
        prev = history[-1]
        if cfg.accel_depth > 0:
            delta = [X[i] - prev_X[i] for i in range(s)]
            w = _apply_linear(system, delta)
            wn0 = float(np.linalg.norm(w))
            for d_s, w_s in zip(dirs, ldirs):
                c = float(w_s @ w)
                if c != 0.0:
                    w -= c * w_s
                    for i in range(s):
                        delta[i] -= c * d_s[i]
            wn = float(np.linalg.norm(w))
            if wn0 > 0.0 and wn > 1e-10 * wn0:
                dirs.append([di / wn for di in delta])
                ldirs.append(w / wn)
                if len(dirs) > cfg.accel_depth:
                    dirs.pop(0)
                    ldirs.pop(0)
            if dirs:
                r = _restricted_vector(system, R)
                theta = [-float(w_s @ r) for w_s in ldirs]
                cand = [
                    X[i] + sum(t * d_s[i] for t, d_s in zip(theta, dirs))
                    for i in range(s)
                ]
                Rc = _residual_matrices(system, cand)
                nc = {key: float(np.sum(mat**2)) for key, mat in Rc.items()}
                if sum(nc.values()) <= sum(norms_sq.values()) * (1.0 + 1e-12):
                    X, R, norms_sq = cand, Rc, nc
        elif cfg.recompute_every and iters % cfg.recompute_every == 0:
            R = _residual_matrices(system, X)
            norms_sq = {key: float(np.sum(mat**2)) for key, mat in R.items()}
        cur = logged()
        history.append(cur)
        if cur * denom <= floor_abs:
            converged = True
        elif prev > 0 and (prev - cur) / prev < cfg.eps_tol:
            converged = True

    return Stage2Result(
        X=X, iterations=iters, converged=converged, residual_history=history
    )


def unknown_cells(system: Stage2System, i: int) -> list[tuple[int, int]]:
    """Row-major unknown cells (l0, p0) of subset slice i."""
    sel = system.subset.selection
    n, b = sel.n, sel.b
    k0 = system.subset.ks[i] - 1
    cells = []
    for l0 in system.rows0[i]:
        l0 = int(l0)
        if abs(l0 - k0) <= b:
            cols = range(n)
        else:
            cols = sorted(
                set(range(max(0, l0 - b), min(n - 1, l0 + b) + 1))
                | set(range(max(0, k0 - b), min(n - 1, k0 + b) + 1))
            )
        cells.extend((l0, p0) for p0 in cols)
    return cells


def assemble_stage2_system(system: Stage2System) -> tuple[np.ndarray, np.ndarray, list]:
    """Dense oracle form of the stage-2 equations (strict lower triangle of
    each pair's antisymmetric matrix equation)."""
    n, s = system.n, system.nslices
    columns: list[tuple[int, int, int]] = []
    col_of: dict[tuple[int, int, int], int] = {}
    for i in range(s):
        for (l0, p0) in unknown_cells(system, i):
            col_of[(i, l0, p0)] = len(columns)
            columns.append((i, l0, p0))
    ncols = len(columns)
    rows = []
    rhs = []
    # per slice, columns of X_i indexed by the cells they own
    for (i, j), Cs in system.Cs.items():
        Gi, Gj = system.G[i], system.G[j]
        for p0 in range(n):
            for q0 in range(p0):
                row = np.zeros(ncols)
                for l0 in system.col_support0[i][p0]:
                    row[col_of[(i, int(l0), p0)]] += Gj[l0, q0]
                for l0 in system.col_support0[i][q0]:
                    row[col_of[(i, int(l0), q0)]] -= Gj[l0, p0]
                for l0 in system.col_support0[j][q0]:
                    row[col_of[(j, int(l0), q0)]] += Gi[l0, p0]
                for l0 in system.col_support0[j][p0]:
                    row[col_of[(j, int(l0), p0)]] -= Gi[l0, q0]
                rows.append(row)
                rhs.append(Cs[p0, q0])
    return np.array(rows), np.array(rhs), columns


def extract_unknowns(system: Stage2System, X: list[np.ndarray]) -> np.ndarray:
    vals = []
    for i in range(system.nslices):
        cells = unknown_cells(system, i)
        vals.append(np.array([X[i][l0, p0] for (l0, p0) in cells]))
    return np.concatenate(vals)
