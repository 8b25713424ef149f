"""File formats and the command-line front end."""

import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odtrec.core import DenseTensor3
from odtrec.errors import FormatError
from odtrec.fileio import (
    read_csv,
    read_metadata,
    read_report,
    read_tensor,
    write_csv,
    write_pgm,
    write_report,
    write_tensor,
)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_tensor_roundtrip(n, seed):
    t = np.random.default_rng(seed).standard_normal((n, n, n))
    import tempfile, os

    fd, path = tempfile.mkstemp(suffix=".odt")
    os.close(fd)
    try:
        write_tensor(path, t)
        back = read_tensor(path)
        assert isinstance(back, DenseTensor3)
        assert np.array_equal(back.data, t)
    finally:
        os.unlink(path)


def test_tensor_write_is_deterministic(tmp_path):
    t = np.random.default_rng(0).standard_normal((5, 5, 5))
    p1, p2 = tmp_path / "a.odt", tmp_path / "b.odt"
    write_tensor(p1, t)
    write_tensor(p2, t)
    assert p1.read_bytes() == p2.read_bytes()


def test_tensor_format_errors(tmp_path):
    with pytest.raises(FormatError):
        write_tensor(tmp_path / "x.odt", np.zeros((3, 4, 3)))
    bad = tmp_path / "bad.odt"
    bad.write_bytes(b"NOTMAGIC" + b"\0" * 64)
    with pytest.raises(FormatError):
        read_tensor(bad)
    good = tmp_path / "good.odt"
    write_tensor(good, np.zeros((4, 4, 4)))
    truncated = tmp_path / "trunc.odt"
    truncated.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(FormatError):
        read_tensor(truncated)
    with pytest.raises(FormatError):
        read_tensor(tmp_path / "missing.odt")


def test_pgm_golden_bytes(tmp_path):
    img = np.array([[0.0, 127.6, 300.0], [255.0, 63.4, -9.0]])
    p = tmp_path / "x.pgm"
    write_pgm(p, img)
    assert p.read_bytes() == b"P5\n3 2\n255\n" + bytes([0, 128, 255, 255, 63, 0])
    with pytest.raises(FormatError):
        write_pgm(tmp_path / "y.pgm", np.zeros(4))


def test_csv_roundtrip_lf_only(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ["a", "b"], [(1, "x"), (2.5, "y")])
    raw = p.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    header, rows = read_csv(p)
    assert header == ["a", "b"]
    assert rows == [["1", "x"], ["2.5", "y"]]
    with pytest.raises(FormatError):
        read_csv(tmp_path / "missing.csv")


def test_report_file_roundtrip(tmp_path):
    import warnings

    from odtrec.errors import FeasibilityWarning
    from odtrec.pipeline import PipelineConfig, recover
    from odtrec.synth import generate_problem

    warnings.simplefilter("ignore", FeasibilityWarning)
    inst = generate_problem(19, 10, 1, corruption_scale=1e3, seed=0)
    rep = recover(inst.observed, PipelineConfig(b=1, r=10))
    p = tmp_path / "rep.json"
    write_report(p, rep, include_timings=False)
    back = read_report(p)
    assert np.array_equal(back.factors.A, rep.factors.A)
    assert back.trusted_residual == rep.trusted_residual
    assert back.timings == {}
    junk = tmp_path / "junk.json"
    junk.write_text("{\"not\": \"a report\"}")
    with pytest.raises(FormatError):
        read_report(junk)
    junk.write_text("{{{")
    with pytest.raises(FormatError):
        read_report(junk)


def cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "odtrec", *map(str, args)],
        capture_output=True, text=True, cwd=cwd,
    )


def test_cli_gen_deterministic(tmp_path):
    a, b = tmp_path / "a.odt", tmp_path / "b.odt"
    r1 = cli("gen", "--n", 19, "--r", 12, "--b", 1, "--seed", 3, "--out", a)
    r2 = cli("gen", "--n", 19, "--r", 12, "--b", 1, "--seed", 3, "--out", b)
    assert r1.returncode == 0 and r2.returncode == 0, r1.stderr
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.odt.json").read_bytes() == (tmp_path / "b.odt.json").read_bytes()
    meta = json.loads((tmp_path / "a.odt.json").read_text())
    assert meta["n"] == 19 and meta["seed"] == 3
    assert meta["feasibility"]["r_necessary"] is True


def test_cli_gen_rejects_bad_shape(tmp_path):
    r = cli("gen", "--n", 0, "--r", 1, "--b", 1, "--out", tmp_path / "x.odt")
    assert r.returncode == 64
    r = cli("gen", "--n", 10, "--r", 11, "--b", 1, "--out", tmp_path / "x.odt")
    assert r.returncode == 64


def test_cli_recover_roundtrip(tmp_path):
    from odtrec.core import relative_error
    from odtrec.synth import generate_problem

    src = tmp_path / "obs.odt"
    out1, out2 = tmp_path / "rec1.odt", tmp_path / "rec2.odt"
    assert cli("gen", "--n", 19, "--r", 12, "--b", 1, "--seed", 5,
               "--out", src).returncode == 0
    r1 = cli("recover", src, "--r", 12, "--b", 1, "--out", out1)
    r2 = cli("recover", src, "--r", 12, "--b", 1, "--out", out2)
    assert r1.returncode == 0, r1.stderr
    assert out1.read_bytes() == out2.read_bytes()
    assert (tmp_path / "rec1.odt.json").read_bytes() == (
        tmp_path / "rec2.odt.json"
    ).read_bytes()
    clean = generate_problem(19, 12, 1, corruption_scale=1e3, seed=5).clean
    rec = read_tensor(out1)
    assert relative_error(rec.data, clean) < 1e-6
    rep = read_report(tmp_path / "rec1.odt.json")
    assert rep.stage1_converged and rep.timings == {}


def test_cli_exit_codes(tmp_path):
    src = tmp_path / "obs.odt"
    assert cli("gen", "--n", 19, "--r", 12, "--b", 1, "--seed", 0,
               "--out", src).returncode == 0
    # infeasible geometry: band too wide for the slice schedule
    r = cli("recover", src, "--r", 12, "--b", 5, "--out", tmp_path / "x.odt")
    assert r.returncode == 2
    # non-convergence: one sweep cannot reach the floor with stalls disabled
    r = cli("recover", src, "--r", 12, "--b", 1, "--max-iters", 1,
            "--tol", 0, "--out", tmp_path / "x.odt")
    assert r.returncode == 3
    # usage and format errors
    assert cli("recover", src, "--r", 12, "--b", 1).returncode == 64  # no --out
    assert cli("frobnicate").returncode == 64
    assert cli("experiment", "region", "--b", "x",
               "--out", tmp_path / "e").returncode == 64
    garbage = tmp_path / "garbage.odt"
    garbage.write_bytes(b"\x01\x02\x03")
    r = cli("recover", garbage, "--r", 12, "--b", 1,
            "--out", tmp_path / "x.odt")
    assert r.returncode == 64


def test_cli_experiment_deterministic(tmp_path):
    d1, d2 = tmp_path / "e1", tmp_path / "e2"
    base = ["experiment", "region", "--n", 24, "--r", 16, "--b", "1",
            "--m", "5:6", "--trials", 1, "--seed", 2]
    r1 = cli(*base, "--out", d1)
    r2 = cli(*base, "--out", d2)
    assert r1.returncode == 0, r1.stderr
    for name in ("region_trials.csv", "region_cells.csv", "region.pgm",
                 "region_meta.json"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
    header, rows = read_csv(d1 / "region_trials.csv")
    assert header[:5] == ["b", "m", "trial", "seed", "status"]
    assert {r[4] for r in rows} == {"success"}
    meta = read_metadata(d1 / "region_meta.json")
    assert meta["experiment"] == "region" and meta["seed"] == 2
