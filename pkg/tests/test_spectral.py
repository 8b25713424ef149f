"""Factor extraction from clean slices and per-slice third-factor solves."""

import numpy as np
import pytest

from odtrec.core import FactorSet, rank1_sum, slice_mask
from odtrec.errors import DegenerateInstanceError
from odtrec.spectral import (
    align_columns,
    factor_distance,
    jennrich,
    solve_c_row,
    solve_third_factor,
)
from odtrec.synth import generate_problem


def test_jennrich_exact_on_clean_slices():
    inst = generate_problem(16, 6, 1, corruption_scale=0.0, seed=0)
    slices = [inst.clean[:, :, k] for k in (0, 5, 11)]
    res = jennrich(slices, 6, seed=0)
    assert factor_distance(res.A, inst.factors.A) < 1e-8
    assert factor_distance(res.B, inst.factors.B) < 1e-8
    assert res.quality > 1e-4


def test_jennrich_rejects_bad_input():
    with pytest.raises(DegenerateInstanceError):
        jennrich([np.eye(4)], 2)
    with pytest.raises(DegenerateInstanceError):
        jennrich([np.eye(4), np.eye(4)], 5)
    with pytest.raises(DegenerateInstanceError):
        jennrich([np.zeros((6, 6)), np.zeros((6, 6))], 2)


def test_align_columns_inverts_scramble():
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((10, 4)))
    perm0 = np.array([2, 0, 3, 1])
    signs0 = np.array([1.0, -1.0, -1.0, 1.0])
    scrambled = q[:, perm0] * signs0
    perm, signs = align_columns(scrambled, q)
    assert np.allclose(scrambled[:, perm] * signs, q, atol=1e-12)
    assert factor_distance(scrambled, q) < 1e-12


def test_solve_c_row_exact_under_corruption():
    inst = generate_problem(20, 9, 1, corruption_scale=1e3, seed=1)
    A, B, C = inst.factors.A, inst.factors.B, inst.factors.C
    for k in (1, 7, 20):
        M = inst.observed[:, :, k - 1]
        c = solve_c_row(A, B, M, slice_mask(k, 1, 20))
        assert np.linalg.norm(c - C[k - 1]) < 1e-8 * np.linalg.norm(C[k - 1])


def test_solve_third_factor_all_rows():
    from odtrec.core import DenseTensor3

    inst = generate_problem(18, 7, 1, corruption_scale=50.0, seed=2)
    C = solve_third_factor(
        inst.factors.A, inst.factors.B, DenseTensor3(inst.observed), 1
    )
    assert C.shape == (18, 7)
    assert np.linalg.norm(C - inst.factors.C) < 1e-8 * np.linalg.norm(inst.factors.C)


def test_reconstruction_from_recovered_factors():
    inst = generate_problem(14, 5, 1, corruption_scale=0.0, seed=4)
    slices = [inst.clean[:, :, k] for k in (0, 4, 9)]
    res = jennrich(slices, 5, seed=0)
    from odtrec.core import DenseTensor3

    C = solve_third_factor(res.A, res.B, DenseTensor3(inst.clean), 1)
    rec = rank1_sum(FactorSet(A=res.A, B=res.B, C=C))
    assert np.linalg.norm(rec - inst.clean) < 1e-8 * np.linalg.norm(inst.clean)
