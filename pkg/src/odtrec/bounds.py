"""Size and rank bounds for band-corrupted recovery.

Two layers of guarantees:

* hard feasibility — the slice schedule must fit, stage 2 needs three
  usable slices, the per-slice column solves need enough clean cells;
* soft guidance — closed-form sufficient bounds under which every solve
  is provably well posed, and necessary bounds below which recovery is
  impossible for some instance.  Between the two we warn and proceed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import FeasibilityError, FeasibilityWarning
from .stage1 import count_equations, count_unknowns, default_slice_count

# (band half-width, smallest admissible size, benchmark rank)
BENCHMARK_ROWS: tuple[tuple[int, int, int], ...] = (
    (1, 19, 7),
    (3, 43, 15),
    (5, 68, 23),
    (7, 94, 30),
    (10, 134, 42),
)


def sufficient_n(b: int) -> int:
    """Size above which all five steps are provably well posed."""
    return 8 * (4 * b + 2)


def sufficient_r(b: int) -> int:
    return 3 * (4 * b + 2)


def necessary_n(b: int) -> int:
    """Below this size some instance is unrecoverable."""
    base = 12 * b + 7
    disc = 1419 * b * b - 2704 * b + 921
    if disc < 0:
        return base
    other = (93 * b + math.sqrt(disc) - 69) / 10.0
    return max(base, math.ceil(other))


def necessary_r(b: int) -> int:
    return 4 * b + 2


def stage2_safe_n(b: int) -> int:
    """Stage-2 column solves are provably full rank from this size on."""
    return 16 * b + 4


def stage2_safe_r(b: int) -> int:
    return 8 * b + 4


def slice_solve_safe_n(b: int) -> int:
    """Per-slice third-factor solves are provably full rank from here on."""
    return 8 * b + 4


def total_equations(n: int, b: int, m: int) -> int:
    return sum(
        count_equations(n, b, m, i, j)
        for i in range(1, m + 1)
        for j in range(i + 1, m + 1)
    )


def total_unknowns(n: int, b: int, m: int) -> int:
    return sum(count_unknowns(n, b, m, i) for i in range(1, m + 1))


def minimal_admissible_n(b: int, m: int = 7, n_max: int = 4096) -> int:
    """Smallest n at which the m-slice schedule fits and the stage-1 system
    has at least as many equations as unknowns."""
    start = (2 * b + 1) * (m - 1) + 1
    for n in range(start, n_max + 1):
        if total_equations(n, b, m) >= total_unknowns(n, b, m):
            return n
    raise FeasibilityError(f"no admissible size <= {n_max} for b={b}, m={m}")


def feasibility_flags(n: int, r: int, b: int) -> dict[str, bool]:
    """Named outcomes of every closed-form admissibility bound."""
    return {
        "n_sufficient": n >= sufficient_n(b),
        "r_sufficient": r >= sufficient_r(b),
        "n_necessary": n >= necessary_n(b),
        "r_necessary": r >= necessary_r(b),
        "stage2_n": n >= stage2_safe_n(b),
        "stage2_r": r >= stage2_safe_r(b),
        "third_factor_n": n >= slice_solve_safe_n(b),
    }


@dataclass(frozen=True)
class FeasibilityReport:
    n: int
    r: int
    b: int
    m: int
    feasible: bool
    warnings: tuple[str, ...]


def check_instance(n: int, r: int, b: int, m: int | None = None) -> FeasibilityReport:
    """Raise FeasibilityError on hard violations; collect soft warnings."""
    if b < 1:
        raise FeasibilityError(f"band half-width must be >= 1, got {b}")
    if not 1 <= r <= n:
        raise FeasibilityError(f"rank must satisfy 1 <= r <= n, got r={r}, n={n}")
    if m is None:
        m = default_slice_count(n, b)  # raises if fewer than 5 slices fit
    if m < 5:
        raise FeasibilityError(
            f"the stage-1 equation count argument needs at least 5 "
            f"distinguished slices, got m={m}"
        )
    if (2 * b + 1) * (m - 1) + 1 > n:
        raise FeasibilityError(
            f"slice schedule needs (2b+1)(m-1)+1 = {(2 * b + 1) * (m - 1) + 1} "
            f"<= n = {n}"
        )
    if r < necessary_r(b):
        raise FeasibilityError(
            f"rank {r} is below the necessary bound {necessary_r(b)} for b={b}"
        )
    warns = []
    if n < necessary_n(b):
        warns.append(
            f"size {n} is below the necessary bound {necessary_n(b)}; "
            "recovery may be impossible"
        )
    if n < sufficient_n(b) or r < sufficient_r(b):
        warns.append(
            f"instance (n={n}, r={r}) is below the sufficient bounds "
            f"(n >= {sufficient_n(b)}, r >= {sufficient_r(b)}); "
            "solves are not guaranteed well posed"
        )
    if n < stage2_safe_n(b) or r < stage2_safe_r(b):
        warns.append(
            f"stage-2 guarantee needs n >= {stage2_safe_n(b)} and "
            f"r >= {stage2_safe_r(b)}"
        )
    if n < slice_solve_safe_n(b):
        warns.append(
            f"third-factor solve guarantee needs n >= {slice_solve_safe_n(b)}"
        )
    return FeasibilityReport(
        n=n, r=r, b=b, m=m, feasible=True, warnings=tuple(warns)
    )


def warn_all(report: FeasibilityReport) -> None:
    import warnings as _w

    for msg in report.warnings:
        _w.warn(msg, FeasibilityWarning, stacklevel=2)
