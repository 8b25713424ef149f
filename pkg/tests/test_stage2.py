"""Transposed-product system on the corrected slices."""

import numpy as np
import pytest
import scipy.linalg

from odtrec.errors import FeasibilityError
from odtrec.stage1 import SliceSystem, SolveConfig, als_stage1, choose_slices
from odtrec.stage2 import (
    Stage2System,
    SubsetSelection,
    als_stage2,
    assemble_stage2_system,
    default_subset,
    extract_unknowns,
    unknown_cells,
)
from odtrec.synth import generate_problem


def corrected_system(n, r, b, scale=1e3, seed=0):
    """Run stage 1 and hand its corrected slices to stage 2, as the
    pipeline does."""
    inst = generate_problem(n, r, b, corruption_scale=scale, seed=seed)
    sel = choose_slices(n, b)
    sys1 = SliceSystem.from_observations(inst.observed, sel)
    res1 = als_stage1(sys1, SolveConfig(max_iters=500))
    assert res1.converged
    sub = default_subset(sel)
    G = [sys1.M[i - 1] - res1.X[i - 1] for i in sub.ordinals]
    return inst, sub, Stage2System(subset=sub, G=G)


def test_default_subset_alternates():
    sel = choose_slices(19, 1, 7)
    sub = default_subset(sel)
    assert sub.ordinals == (1, 3, 5, 7)
    assert sub.ks == (1, 7, 13, 19)


def test_adjacent_subset_rejected():
    sel = choose_slices(19, 1, 7)
    with pytest.raises(FeasibilityError):
        # consecutive schedule slices are only 2b+1 apart: neighborhoods meet
        Stage2System(
            subset=SubsetSelection(selection=sel, ordinals=(1, 2, 4)),
            G=[np.zeros((19, 19))] * 3,
        )


def test_subset_too_small():
    sel = choose_slices(13, 1, 5)
    sub = default_subset(sel)  # 1, 3, 5 still works at m = 5
    assert sub.ordinals == (1, 3, 5)
    with pytest.raises(FeasibilityError):
        default_subset(choose_slices(10, 1, 4))


def test_als_matches_dense_least_squares():
    _, _, sys2 = corrected_system(19, 12, 1, seed=2)
    res = als_stage2(sys2, SolveConfig(eps_tol=1e-10, max_iters=500))
    assert res.converged
    A, rhs, _ = assemble_stage2_system(sys2)
    x_ls, *_ = scipy.linalg.lstsq(A, rhs, lapack_driver="gelsd")
    x_als = extract_unknowns(sys2, res.X)
    rel = np.linalg.norm(x_als - x_ls) / np.linalg.norm(x_ls)
    assert rel < 1e-6


def test_recovers_remaining_corruption():
    inst, sub, sys2 = corrected_system(19, 12, 1, seed=4)
    res = als_stage2(sys2, SolveConfig(max_iters=500))
    assert res.converged
    for i, k in enumerate(sub.ks):
        E_k = inst.corruption[:, :, k - 1]
        cells = unknown_cells(sys2, i)
        got = np.array([res.X[i][l0, p0] for (l0, p0) in cells])
        want = np.array([E_k[l0, p0] for (l0, p0) in cells])
        assert np.linalg.norm(got - want) <= 1e-6 * max(1.0, np.linalg.norm(want))
    # corrected slices should now match the clean tensor everywhere
    for i, k in enumerate(sub.ks):
        final = sys2.G[i] - res.X[i]
        ref = inst.clean[:, :, k - 1]
        assert np.linalg.norm(final - ref) <= 1e-6 * max(1.0, np.linalg.norm(ref))


def test_unknown_cells_cover_stage1_gap():
    _, _, sys2 = corrected_system(19, 10, 1)
    sel = sys2.subset.selection
    n, b = sel.n, sel.b
    for i, k in enumerate(sys2.subset.ks):
        k0 = k - 1
        cells = set(unknown_cells(sys2, i))
        for l0 in range(n):
            for p0 in range(n):
                near_k = abs(l0 - k0) <= 2 * b
                if abs(l0 - k0) <= b:
                    want = True  # full row is unknown
                elif near_k:
                    want = abs(p0 - l0) <= b or abs(p0 - k0) <= b
                else:
                    want = False  # stage 1 already solved this row
                assert ((l0, p0) in cells) == want


def test_deterministic():
    _, _, sys2 = corrected_system(19, 10, 1, seed=6)
    a = als_stage2(sys2, SolveConfig(max_iters=200))
    b = als_stage2(sys2, SolveConfig(max_iters=200))
    assert all(np.array_equal(x, y) for x, y in zip(a.X, b.X))
    assert a.residual_history == b.residual_history
