"""Closed-form counting over integer intervals.

Everything here works on inclusive 1-based intervals [lo, hi]; an empty
interval is any pair with hi < lo.  These helpers back the unknown/equation
counting formulas, which must agree exactly with brute-force enumeration.
"""

from __future__ import annotations


def iv_len(lo: int, hi: int) -> int:
    return max(0, hi - lo + 1)


def clamp(lo: int, hi: int, n: int) -> tuple[int, int]:
    """Intersect [lo, hi] with [1, n]."""
    return max(1, lo), min(n, hi)


def overlap(a: tuple[int, int], b: tuple[int, int]) -> int:
    return iv_len(max(a[0], b[0]), min(a[1], b[1]))


def subtract(universe: tuple[int, int], holes: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Maximal intervals of universe \\ (union of holes)."""
    lo, hi = universe
    out = []
    cur = lo
    for hlo, hhi in sorted(holes):
        hlo, hhi = max(hlo, lo), min(hhi, hi)
        if hhi < hlo:
            continue
        if hlo > cur:
            out.append((cur, hlo - 1))
        cur = max(cur, hhi + 1)
    if cur <= hi:
        out.append((cur, hi))
    return out


def band_row_len(ell: int, b: int, n: int) -> int:
    """Number of columns j in [1, n] with |ell - j| <= b."""
    return iv_len(*clamp(ell - b, ell + b, n))


def sum_band_row_len(lo: int, hi: int, b: int, n: int) -> int:
    """Sum of band_row_len(ell) for ell in [lo, hi] (clamped to [1, n])."""
    lo, hi = clamp(lo, hi, n)
    if hi < lo:
        return 0
    total = (hi - lo + 1) * (2 * b + 1)
    # rows near the top lose ell - b .. 0, rows near the bottom lose n+1 .. ell + b
    for ell_edge in range(lo, min(hi, b) + 1):
        total -= b + 1 - ell_edge
    for ell_edge in range(max(lo, n - b + 1), hi + 1):
        total -= ell_edge + b - n
    return total


def box_gap_count(q_iv: tuple[int, int], p_iv: tuple[int, int], gap: int) -> int:
    """#{(q, p) : q in q_iv, p in p_iv, p - q > gap}, in closed form.

    Piecewise: per fixed q the count of admissible p is the length of
    [max(p_lo, q+gap+1), p_hi], which is constant for small q, then decreases
    by one per unit q, then hits zero.
    """
    qlo, qhi = q_iv
    plo, phi = p_iv
    if qhi < qlo or phi < plo:
        return 0
    full = phi - plo + 1
    # q small enough that every p qualifies: q + gap + 1 <= plo
    q_full_hi = min(qhi, plo - gap - 1)
    total = iv_len(qlo, q_full_hi) * full
    # linear segment: count(q) = phi - gap - q, positive while q <= phi - gap - 1
    q_lin_lo = max(qlo, plo - gap)
    q_lin_hi = min(qhi, phi - gap - 1)
    if q_lin_hi >= q_lin_lo:
        first = phi - gap - q_lin_lo
        last = phi - gap - q_lin_hi
        total += (first + last) * (q_lin_hi - q_lin_lo + 1) // 2
    return total
