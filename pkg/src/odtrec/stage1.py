"""Stage 1: recover corruption rows away from the distinguished slices.

For distinguished slices k_1 < ... < k_m and observed slices M_i, the
unknown corruption X_i lives in U(k_i).  Pairing slices i != j and using
that the clean parts make M_i M_j^T symmetric after correction yields, at
cells where the quadratic corruption products provably vanish, the linear
system

    X_i M_j^T - M_j X_i^T + M_i X_j^T - X_j M_i^T = M_i M_j^T - M_j M_i^T

restricted outside a widened pair mask (|p-q| <= 2b, plus all rows/columns
within 2b of k_i or k_j).  These equations constrain exactly the rows of
X_i with index farther than 2b from k_i; those rows are solved here by
sequential row-wise least squares (Gauss-Seidel ALS), ascending slice and
row order, X = 0 start.  Rows within 2b of k_i are left for stage 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DenseTensor3
from .errors import DegenerateInstanceError, FeasibilityError
from .intervals import box_gap_count, clamp, iv_len, subtract, sum_band_row_len

MAX_DEFAULT_SLICES = 7


def slice_positions(n: int, b: int, m: int) -> np.ndarray:
    """1-based k_i = (2b+1)(i-1) + 1 for i = 1..m."""
    return 1 + (2 * b + 1) * np.arange(m, dtype=np.int64)


def default_slice_count(n: int, b: int) -> int:
    """min(7, largest m that fits); at least 5 slices are required."""
    fit = 1 + (n - 1) // (2 * b + 1)
    m = min(MAX_DEFAULT_SLICES, fit)
    if m < 5:
        raise FeasibilityError(
            f"only {fit} slices of spacing {2 * b + 1} fit in n={n}; need at least 5"
        )
    return m


@dataclass(frozen=True)
class SliceSelection:
    n: int
    b: int
    m: int
    ks: tuple[int, ...]  # 1-based distinguished slice indices


def choose_slices(n: int, b: int, m: int | None = None) -> SliceSelection:
    """Pick m equispaced distinguished slices with disjoint b-neighborhoods."""
    if m is None:
        m = default_slice_count(n, b)
    if m < 2:
        raise FeasibilityError(f"m={m} distinguished slices cannot form a pair")
    last = (2 * b + 1) * (m - 1) + 1
    if last > n:
        raise FeasibilityError(
            f"(2b+1)(m-1)+1 = {last} exceeds n = {n}: "
            f"m={m} slices of spacing {2 * b + 1} do not fit"
        )
    ks = slice_positions(n, b, m)
    return SliceSelection(n=n, b=b, m=m, ks=tuple(int(k) for k in ks))


@dataclass(eq=False)
class PairMask:
    """Trusted-cell mask for the pair (k_i, k_j).

    A cell (p, q), 1-based, is masked (untrusted) iff |p-q| <= 2b or p or q
    lies within 2b of k_i or k_j.  Complement cells carry the stage-1
    equations.
    """

    n: int
    b: int
    ki: int
    kj: int

    def __post_init__(self):
        n, b = self.n, self.b
        holes = [clamp(self.ki - 2 * b, self.ki + 2 * b, n),
                 clamp(self.kj - 2 * b, self.kj + 2 * b, n)]
        self.keep_intervals = subtract((1, n), holes)
        keep0 = np.concatenate(
            [np.arange(lo - 1, hi) for lo, hi in self.keep_intervals]
        ) if self.keep_intervals else np.empty(0, dtype=np.int64)
        self.keep0 = keep0.astype(np.int64)
        self.inkeep = np.zeros(n, dtype=bool)
        self.inkeep[self.keep0] = True
        self._cells: tuple[np.ndarray, np.ndarray] | None = None

    def contains(self, p: int, q: int) -> bool:
        b = self.b
        return (
            abs(p - q) <= 2 * b
            or abs(p - self.ki) <= 2 * b
            or abs(q - self.ki) <= 2 * b
            or abs(p - self.kj) <= 2 * b
            or abs(q - self.kj) <= 2 * b
        )

    def complement_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based (rows, cols) of trusted cells, row-major."""
        if self._cells is None:
            k = self.keep0
            far = np.abs(k[:, None] - k[None, :]) > 2 * self.b
            ii, jj = np.nonzero(far)
            self._cells = (k[ii], k[jj])
        return self._cells

    def lower_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Trusted cells strictly below the diagonal, row-major."""
        k = self.keep0
        low = (k[:, None] - k[None, :]) > 2 * self.b
        ii, jj = np.nonzero(low)
        return k[ii], k[jj]


def pair_mask(n: int, b: int, ki: int, kj: int) -> PairMask:
    return PairMask(n=n, b=b, ki=ki, kj=kj)


def count_unknowns(n: int, b: int, m: int, i: int) -> int:
    """Free entries of U(k_i) in rows farther than 2b from k_i.

    Closed form: every free row contributes its diagonal-band cells plus the
    columns within b of k_i (the two sets never meet for rows farther than
    2b from k_i).
    """
    if not (1 <= i <= m):
        raise ValueError(f"slice ordinal i={i} out of range [1, {m}]")
    k = int(slice_positions(n, b, m)[i - 1])
    wide = clamp(k - 2 * b, k + 2 * b, n)
    cols = iv_len(*clamp(k - b, k + b, n))
    total = 0
    for lo, hi in subtract((1, n), [wide]):
        total += sum_band_row_len(lo, hi, b, n) + cols * iv_len(lo, hi)
    return total


def count_equations(n: int, b: int, m: int, i: int, j: int) -> int:
    """Independent stage-1 equations for the pair (i, j): trusted cells of
    the pair mask strictly below the diagonal (the system is antisymmetric,
    so the upper triangle repeats them)."""
    if i == j:
        raise ValueError("need two distinct slices")
    ks = slice_positions(n, b, m)
    pm = PairMask(n=n, b=b, ki=int(ks[i - 1]), kj=int(ks[j - 1]))
    total = 0
    for q_iv in pm.keep_intervals:
        for p_iv in pm.keep_intervals:
            total += box_gap_count(q_iv, p_iv, 2 * b)
    return total


def pair_residual(
    Mi: np.ndarray, Mj: np.ndarray, Xi: np.ndarray, Xj: np.ndarray, mask: PairMask
) -> np.ndarray:
    """Equation residual for one pair at all trusted cells, row-major."""
    R = _pair_lhs(Mi, Mj, Xi, Xj) - _pair_rhs(Mi, Mj)
    ii, jj = mask.complement_cells()
    return R[ii, jj]


def _pair_rhs(Mi: np.ndarray, Mj: np.ndarray) -> np.ndarray:
    P = Mi @ Mj.T
    return P - P.T


def _pair_lhs(Mi: np.ndarray, Mj: np.ndarray, Xi: np.ndarray, Xj: np.ndarray) -> np.ndarray:
    Z = Xi @ Mj.T + Mi @ Xj.T
    return Z - Z.T


@dataclass(eq=False)
class SliceSystem:
    """Distinguished slices plus precomputed pair data."""

    selection: SliceSelection
    M: list[np.ndarray]
    C: dict[tuple[int, int], np.ndarray] = field(init=False)
    masks: dict[tuple[int, int], PairMask] = field(init=False)
    free_rows0: list[np.ndarray] = field(init=False)
    row_support0: list[dict[int, np.ndarray]] = field(init=False)
    rhs_norm: float = field(init=False)
    rhs_noise: float = field(init=False)

    def __post_init__(self):
        n, b, m = self.selection.n, self.selection.b, self.selection.m
        ks = self.selection.ks
        self.C = {}
        self.masks = {}
        sq = 0.0
        noise_sq = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                self.masks[(i, j)] = PairMask(n=n, b=b, ki=ks[i], kj=ks[j])
                self.C[(i, j)] = _pair_rhs(self.M[i], self.M[j])
                ii, jj = self.masks[(i, j)].complement_cells()
                v = self.C[(i, j)][ii, jj]
                sq += float(v @ v)
                # float-noise level of the restricted constant term: forming
                # C[p, q] sums n products, each rounded at eps of its size
                A = np.abs(self.M[i]) @ np.abs(self.M[j]).T
                w = A[ii, jj]
                noise_sq += float(w @ w)
        self.rhs_norm = float(np.sqrt(sq))
        self.rhs_noise = float(np.finfo(np.float64).eps * np.sqrt(noise_sq))
        self.free_rows0 = []
        self.row_support0 = []
        idx = np.arange(n)
        for i in range(m):
            k0 = ks[i] - 1
            free = idx[np.abs(idx - k0) > 2 * b]
            self.free_rows0.append(free)
            cols_k = np.arange(max(0, k0 - b), min(n - 1, k0 + b) + 1)
            supp = {}
            for l0 in free:
                band = np.arange(max(0, l0 - b), min(n - 1, l0 + b) + 1)
                s = np.unique(np.concatenate([band, cols_k]))
                supp[int(l0)] = s
            self.row_support0.append(supp)

    @property
    def n(self) -> int:
        return self.selection.n

    @property
    def b(self) -> int:
        return self.selection.b

    @property
    def m(self) -> int:
        return self.selection.m

    @classmethod
    def from_observations(
        cls, observed: DenseTensor3 | np.ndarray, selection: SliceSelection
    ) -> "SliceSystem":
        data = observed.data if isinstance(observed, DenseTensor3) else np.asarray(observed)
        M = [np.ascontiguousarray(data[:, :, k - 1], dtype=np.float64) for k in selection.ks]
        return cls(selection=selection, M=M)


@dataclass
class SolveConfig:
    """Shared ALS knobs.

    eps_tol stops a stage once the relative improvement of the global
    restricted residual between consecutive sweeps falls below it.
    Residual histories are reported relative to the norm of the constant
    term, so they are scale-free.

    accel_depth > 0 turns on safeguarded subspace extrapolation between
    sweeps: the residual is affine in the unknowns, so the best correction
    in the span of the last few sweep differences is an exact small least
    squares problem.  A step is accepted only if the exactly recomputed
    residual does not increase, which preserves the monotonicity that the
    exact row updates guarantee.
    """

    eps_tol: float = 1e-8
    max_iters: int = 500
    log_rows: bool = False
    recompute_every: int = 25
    accel_depth: int = 6


@dataclass
class Stage1Result:
    X: list[np.ndarray]
    iterations: int
    converged: bool
    residual_history: list[float]
    row_residual_log: list[float] | None


def _residual_matrices(system: SliceSystem, X: list[np.ndarray]) -> dict:
    R = {}
    for (i, j), C in system.C.items():
        R[(i, j)] = _pair_lhs(system.M[i], system.M[j], X[i], X[j]) - C
    return R


def _pair_norms_sq(system: SliceSystem, R: dict) -> dict:
    out = {}
    for key, mat in R.items():
        ii, jj = system.masks[key].complement_cells()
        v = mat[ii, jj]
        out[key] = float(v @ v)
    return out


def _restricted_vector(system: SliceSystem, R: dict) -> np.ndarray:
    """Concatenate every pair's trusted-cell entries in a fixed order."""
    parts = []
    for key in sorted(R):
        ii, jj = system.masks[key].complement_cells()
        parts.append(R[key][ii, jj])
    return np.concatenate(parts)


def _apply_linear(system: SliceSystem, D: list[np.ndarray]) -> np.ndarray:
    """Homogeneous part of the residual at corruption candidate D,
    restricted to the trusted cells (same order as _restricted_vector)."""
    parts = []
    for i, j in sorted(system.masks):
        mat = _pair_lhs(system.M[i], system.M[j], D[i], D[j])
        ii, jj = system.masks[(i, j)].complement_cells()
        parts.append(mat[ii, jj])
    return np.concatenate(parts)


class _RowPlan:
    """One free row's least-squares operator, factored once.

    The stacked design depends only on the observed slices and the masks,
    so its pseudoinverse is reusable across every sweep; a row update is
    then two small matvecs per participating pair.
    """

    __slots__ = ("i", "l0", "S", "parts", "pinv", "sizes")

    def __init__(self, system: SliceSystem, i: int, l0: int):
        n, b, m = system.n, system.b, system.m
        self.i = i
        self.l0 = l0
        self.S = system.row_support0[i][l0]
        self.parts = []
        blocks = []
        for j in range(m):
            if j == i:
                continue
            key = (i, j) if i < j else (j, i)
            pm = system.masks[key]
            if not pm.inkeep[l0]:
                continue
            keep = pm.keep0
            lo = np.searchsorted(keep, l0 - 2 * b)
            hi = np.searchsorted(keep, l0 + 2 * b, side="right")
            q = np.concatenate([keep[:lo], keep[hi:]])
            if q.size == 0:
                continue
            D = system.M[j][q[:, None], self.S[None, :]]
            sign = 1.0 if i < j else -1.0
            self.parts.append((key, sign, q, D))
            blocks.append(D)
        if not blocks:
            raise DegenerateInstanceError(
                f"row {l0 + 1} of slice {i + 1} has no usable equations; "
                "try a smaller b or a different seed"
            )
        stacked = np.vstack(blocks) if len(blocks) > 1 else blocks[0]
        u, s, vt = np.linalg.svd(stacked, full_matrices=False)
        cut = s[0] * max(stacked.shape) * np.finfo(np.float64).eps
        if s.size < self.S.size or s[-1] <= cut:
            raise DegenerateInstanceError(
                f"rank-deficient row subproblem (slice {i + 1}, row {l0 + 1}): "
                "try a smaller b or a different seed"
            )
        self.pinv = (vt.T / s) @ u.T
        self.sizes = [q.size for _, _, q, _ in self.parts]


def als_stage1(system: SliceSystem, cfg: SolveConfig | None = None) -> Stage1Result:
    """Row-wise Gauss-Seidel least squares on the coupled pair equations.

    Each free row of each X_i is re-solved exactly against all pairs it
    appears in, holding every other row fixed; one sweep visits all slices
    and rows in ascending order.  Exact row solves make the restricted
    residual non-increasing after every row update.  Between sweeps an
    optional extrapolation step (see SolveConfig) shortcuts the slow
    geometric tail; it is accepted only when it also decreases the residual.
    """
    if cfg is None:
        cfg = SolveConfig()
    n, m = system.n, system.m
    X = [np.zeros((n, n)) for _ in range(m)]
    plans = [
        _RowPlan(system, i, int(l0))
        for i in range(m)
        for l0 in system.free_rows0[i]
    ]
    # maintained residual matrices: row/column updates touch only the
    # updated row index, so they can be kept current incrementally
    R = _residual_matrices(system, X)
    norms_sq = _pair_norms_sq(system, R)

    # the restricted constant term carries ~rhs_noise of rounding error
    # from its own assembly, so that is the honest absolute target
    floor_abs = 50.0 * system.rhs_noise
    denom = max(system.rhs_norm, floor_abs)

    def logged() -> float:
        return float(np.sqrt(max(0.0, sum(norms_sq.values()))) / denom)

    history = [logged()]
    row_log: list[float] | None = [] if cfg.log_rows else None
    converged = history[0] * denom <= floor_abs
    iters = 0
    # extrapolation window: search directions with orthonormal images, so
    # the correction below is an exact projection of the residual
    dirs: list[list[np.ndarray]] = []
    ldirs: list[np.ndarray] = []

    while not converged and iters < cfg.max_iters:
        prev_X = [Xi.copy() for Xi in X] if cfg.accel_depth > 0 else None
        for plan in plans:
            Xi = X[plan.i]
            l0 = plan.l0
            xold = Xi[l0, plan.S]
            rhs_parts = [
                D @ xold - sign * R[key][l0, q]
                for key, sign, q, D in plan.parts
            ]
            rhs = np.concatenate(rhs_parts) if len(rhs_parts) > 1 else rhs_parts[0]
            x = plan.pinv @ rhs
            Xi[l0, plan.S] = x
            off = 0
            for (key, sign, q, D), sz in zip(plan.parts, plan.sizes):
                vals = D @ x - rhs[off: off + sz]
                off += sz
                old = R[key][l0, q]
                # row and mirrored column change together
                norms_sq[key] += 2.0 * (float(vals @ vals) - float(old @ old))
                R[key][l0, q] = sign * vals
                R[key][q, l0] = -sign * vals
            if row_log is not None:
                row_log.append(logged())
        iters += 1
        prev = history[-1]
        if cfg.accel_depth > 0:
            delta = [X[i] - prev_X[i] for i in range(m)]
            w = _apply_linear(system, delta)
            wn0 = float(np.linalg.norm(w))
            # image-space Gram-Schmidt: store only the component that is
            # new relative to the window (consecutive sweep differences are
            # nearly parallel, so raw differences would waste the window)
            for d_s, w_s in zip(dirs, ldirs):
                c = float(w_s @ w)
                if c != 0.0:
                    w -= c * w_s
                    for i in range(m):
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
                    for i in range(m)
                ]
                Rc = _residual_matrices(system, cand)
                nc = _pair_norms_sq(system, Rc)
                if sum(nc.values()) <= sum(norms_sq.values()) * (1.0 + 1e-12):
                    X, R, norms_sq = cand, Rc, nc
                # a rejected step only means the window is exhausted at this
                # point; the residual map is affine, so stored directions
                # stay valid and are kept for later sweeps
        elif cfg.recompute_every and iters % cfg.recompute_every == 0:
            # kill accumulated float drift in the maintained residuals
            R = _residual_matrices(system, X)
            norms_sq = _pair_norms_sq(system, R)
        cur = logged()
        history.append(cur)
        if cur * denom <= floor_abs:
            converged = True
        elif prev > 0 and (prev - cur) / prev < cfg.eps_tol:
            converged = True

    return Stage1Result(
        X=X,
        iterations=iters,
        converged=converged,
        residual_history=history,
        row_residual_log=row_log,
    )


def assemble_full_system(system: SliceSystem) -> tuple[np.ndarray, np.ndarray, list]:
    """Materialize the stage-1 equations as one dense least-squares system.

    Unknown order: slices ascending, free rows ascending, support columns
    ascending.  Equation order: pairs (i < j) ascending, trusted cells
    strictly below the diagonal in row-major order.  Intended as a direct
    oracle and for rank diagnostics; quadratic-size, small n only.

    Returns (G, h, columns) with columns[c] = (i0, l0, col0).
    """
    n, m = system.n, system.m
    columns: list[tuple[int, int, int]] = []
    col_of: dict[tuple[int, int], int] = {}
    for i in range(m):
        for l0 in system.free_rows0[i]:
            l0 = int(l0)
            S = system.row_support0[i][l0]
            col_of[(i, l0)] = len(columns)
            for c0 in S:
                columns.append((i, l0, int(c0)))
    ncols = len(columns)
    rows = []
    rhs = []
    for (i, j), pm in system.masks.items():
        pp, qq = pm.lower_cells()
        Mi, Mj, C = system.M[i], system.M[j], system.C[(i, j)]
        for p0, q0 in zip(pp, qq):
            row = np.zeros(ncols)
            Sp_i = system.row_support0[i][p0]
            Sq_i = system.row_support0[i][q0]
            Sp_j = system.row_support0[j][p0]
            Sq_j = system.row_support0[j][q0]
            row[col_of[(i, p0)]: col_of[(i, p0)] + Sp_i.size] += Mj[q0, Sp_i]
            row[col_of[(i, q0)]: col_of[(i, q0)] + Sq_i.size] -= Mj[p0, Sq_i]
            row[col_of[(j, q0)]: col_of[(j, q0)] + Sq_j.size] += Mi[p0, Sq_j]
            row[col_of[(j, p0)]: col_of[(j, p0)] + Sp_j.size] -= Mi[q0, Sp_j]
            rows.append(row)
            rhs.append(C[p0, q0])
    G = np.array(rows) if rows else np.zeros((0, ncols))
    h = np.array(rhs)
    return G, h, columns


def extract_unknowns(system: SliceSystem, X: list[np.ndarray]) -> np.ndarray:
    """Free entries of the X_i in assemble_full_system column order."""
    vals = []
    for i in range(system.m):
        for l0 in system.free_rows0[i]:
            l0 = int(l0)
            S = system.row_support0[i][l0]
            vals.append(X[i][l0, S])
    return np.concatenate(vals)
