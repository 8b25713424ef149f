"""Benchmark sweeps: statuses, seeding, reproducibility."""

import warnings

import numpy as np

from odtrec.errors import FeasibilityWarning
from odtrec.experiments import (
    SUCCESS_THRESHOLD,
    experiment_iterations,
    experiment_noise,
    experiment_region,
    trial_seed,
)

warnings.simplefilter("ignore", FeasibilityWarning)


def test_trial_seed_stable_and_distinct():
    assert trial_seed(0, 1, 2, 3) == trial_seed(0, 1, 2, 3)
    seen = {trial_seed(0, a, b) for a in range(6) for b in range(6)}
    assert len(seen) == 36
    assert trial_seed(1, 2, 3) != trial_seed(0, 2, 3)


def test_region_statuses():
    res = experiment_region(24, 16, [1, 2], [4, 5], trials=1, seed=0)
    status = {(r[0], r[1]): r[4] for r in res.rows}
    assert status[(1, 4)] == "infeasible"  # fewer than 5 slices
    assert status[(1, 5)] == "success"
    assert status[(2, 4)] == "infeasible"
    assert status[(2, 5)] == "infeasible"  # equations < unknowns at n=24
    agg = {(r[0], r[1]): r for r in res.agg_rows}
    assert agg[(1, 5)][3] == 1  # one success
    assert float(agg[(1, 5)][6]) < SUCCESS_THRESHOLD
    assert res.heatmap.shape == (2, 2)
    assert res.heatmap[0, 1] == 255 and res.heatmap[0, 0] == 0


def test_iterations_clean_converges_immediately():
    res = experiment_iterations(
        19, [1], [10, 12], trials=2, seed=0, corruption_scale=0.0
    )
    for row in res.rows:
        assert row[4] == "ok"
        assert row[5] <= 2
    for row in res.agg_rows:
        assert float(row[5]) <= 2.0  # mean sweep count


def test_noise_error_grows_with_rho():
    res = experiment_noise(
        30, 1, [20], [0.0, 1e-3], trials=2, seed=0, max_iters=800
    )
    mean = {r[0]: float(r[4]) for r in res.agg_rows}
    assert mean["0.0"] < SUCCESS_THRESHOLD
    assert mean["0.001"] > mean["0.0"]
    completed = {r[0]: r[3] for r in res.agg_rows}
    assert completed["0.0"] == 2 and completed["0.001"] == 2


def test_region_reproducible(tmp_path):
    a = experiment_region(19, 12, [1], [5], trials=2, seed=1)
    b = experiment_region(19, 12, [1], [5], trials=2, seed=1)
    assert a.rows == b.rows and a.agg_rows == b.agg_rows
    assert np.array_equal(a.heatmap, b.heatmap)
    da, db = tmp_path / "a", tmp_path / "b"
    a.write(da)
    b.write(db)
    for name in ("region_trials.csv", "region_cells.csv", "region.pgm",
                 "region_meta.json"):
        assert (da / name).read_bytes() == (db / name).read_bytes()
