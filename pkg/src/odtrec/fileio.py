"""File formats: binary cubical tensors, JSON reports and metadata, CSV
tables, and binary graymap images for dependency-free heatmaps.

Tensor format ("ODT1"): the 8-byte magic ``ODTENSR1``, three little-endian
64-bit unsigned dimensions (all equal for a cubical tensor), then n**3
little-endian IEEE-754 doubles in column-major order.  Every writer here is
bitwise deterministic given identical inputs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import DenseTensor3
from .errors import FormatError
from .pipeline import RecoveryReport

MAGIC = b"ODTENSR1"
_HEADER_BYTES = len(MAGIC) + 3 * 8


def write_tensor(path: str | Path, t: DenseTensor3 | np.ndarray) -> None:
    data = t.data if isinstance(t, DenseTensor3) else np.asarray(t)
    if data.ndim != 3 or len(set(data.shape)) != 1:
        raise FormatError(f"tensor files hold cubical 3-way arrays, got shape {data.shape}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.asarray(data.shape, dtype="<u8").tobytes())
        fh.write(np.asarray(data, dtype="<f8").ravel(order="F").tobytes())


def read_tensor(path: str | Path) -> DenseTensor3:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read tensor file {path}: {e}") from e
    if len(raw) < _HEADER_BYTES or raw[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: not a tensor file (bad magic)")
    dims = np.frombuffer(raw, dtype="<u8", count=3, offset=len(MAGIC))
    if not (dims[0] == dims[1] == dims[2]) or dims[0] == 0:
        raise FormatError(
            f"{path}: dimensions {tuple(int(d) for d in dims)} are not cubical"
        )
    n = int(dims[0])
    expected = _HEADER_BYTES + 8 * n**3
    if len(raw) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for n={n}, found {len(raw)}"
        )
    vals = np.frombuffer(raw, dtype="<f8", count=n**3, offset=_HEADER_BYTES)
    return DenseTensor3(vals.reshape((n, n, n), order="F").copy())


def _dump_json(path: str | Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report(
    path: str | Path, report: RecoveryReport, include_timings: bool = True
) -> None:
    """Serialize a recovery report; wall-clock timings are droppable so the
    written bytes can be a pure function of (input, config)."""
    _dump_json(path, report.to_dict(include_timings=include_timings))


def read_report(path: str | Path) -> RecoveryReport:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as e:
        raise FormatError(f"cannot read report {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from e
    try:
        return RecoveryReport.from_dict(payload)
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}: not a recovery report: {e}") from e


def write_metadata(path: str | Path, meta: dict) -> None:
    _dump_json(path, meta)


def read_metadata(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise FormatError(f"cannot read metadata {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from e


def write_csv(path: str | Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise FormatError(f"cannot read table {path}: {e}") from e
    if not rows:
        raise FormatError(f"{path}: empty table")
    return rows[0], rows[1:]


def write_pgm(path: str | Path, img: np.ndarray) -> None:
    """8-bit binary portable graymap (P5); values are clipped to 0..255."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise FormatError(f"graymaps need a nonempty 2-d array, got shape {a.shape}")
    a8 = np.clip(np.rint(a), 0, 255).astype(np.uint8)
    h, w = a8.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(a8.tobytes())
