"""Closed-form interval counting vs brute-force set enumeration."""

from hypothesis import given, settings
from hypothesis import strategies as st

from odtrec.intervals import (
    band_row_len,
    box_gap_count,
    clamp,
    iv_len,
    overlap,
    subtract,
    sum_band_row_len,
)

iv = st.tuples(st.integers(-30, 30), st.integers(-30, 30))


def cells(lo, hi):
    return set(range(lo, hi + 1))


@given(iv)
def test_iv_len(ab):
    lo, hi = ab
    assert iv_len(lo, hi) == len(cells(lo, hi))


@given(iv, st.integers(1, 40))
def test_clamp(ab, n):
    lo, hi = clamp(*ab, n)
    assert cells(lo, hi) == cells(*ab) & cells(1, n)


@given(iv, iv)
def test_overlap(a, b):
    assert overlap(a, b) == len(cells(*a) & cells(*b))


@given(iv, st.lists(iv, max_size=6))
def test_subtract_covers_exactly(universe, holes):
    got = subtract(universe, holes)
    want = cells(*universe) - set().union(*(cells(*h) for h in holes), set())
    assert set().union(*(cells(*p) for p in got), set()) == want
    # pieces are maximal: disjoint, ordered, and separated by removed cells
    for lo, hi in got:
        assert lo <= hi
    for (a, b), (c, d) in zip(got, got[1:]):
        assert b + 1 < c


@given(st.integers(1, 60), st.integers(0, 10), st.integers(1, 60))
def test_band_row_len(ell, b, n):
    assert band_row_len(ell, b, n) == sum(
        1 for j in range(1, n + 1) if abs(ell - j) <= b
    )


@given(iv, st.integers(0, 6), st.integers(1, 40))
def test_sum_band_row_len(ab, b, n):
    lo, hi = ab
    brute = sum(
        band_row_len(ell, b, n) for ell in cells(lo, hi) & cells(1, n)
    )
    assert sum_band_row_len(lo, hi, b, n) == brute


@settings(max_examples=200)
@given(iv, iv, st.integers(-5, 20))
def test_box_gap_count(q_iv, p_iv, gap):
    brute = sum(
        1
        for q in cells(*q_iv)
        for p in cells(*p_iv)
        if p - q > gap
    )
    assert box_gap_count(q_iv, p_iv, gap) == brute
