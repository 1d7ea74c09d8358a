"""Snapshot and table I/O.

MPOLAR1 layout (little-endian)::

    8 bytes   magic  b"MPOLAR1\\0"
    u32       n
    f64       L      (box length)
    f64       time
    6 n^3     complex128 coefficients, u1 u2 u3 w1 w2 w3, each n x n x n in
              row-major lattice (numpy FFT index) order
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .spectral import GridSpec, SpectralField, StateSpectral

MAGIC = b"MPOLAR1\x00"
_HEADER = struct.Struct("<8sIdd")


class FormatError(ValueError):
    pass


def write_snapshot(path, state: StateSpectral, time: float = 0.0) -> None:
    g = state.grid
    data = np.ascontiguousarray(state.stacked(), dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.n, float(g.box_length), float(time)))
        fh.write(data.tobytes(order="C"))


def read_snapshot(path) -> tuple[StateSpectral, float]:
    """Load a snapshot; returns the state and its time."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file too short for an MPOLAR1 header")
    magic, n, L, time = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    expected = _HEADER.size + 6 * n**3 * 16
    if len(raw) != expected:
        raise FormatError(f"expected {expected} bytes for n={n}, got {len(raw)}")
    grid = GridSpec(n, L)
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape((6,) + grid.shape)
    data = data.astype(complex)
    return StateSpectral(SpectralField(grid, data[:3]), SpectralField(grid, data[3:])), time


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"refusing to write non-finite value {x!r}")
    return repr(x)


def write_csv(path, columns, rows) -> None:
    """Write a header and rows; floats use shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in r] for r in reader]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (Path, tuple)):
        return str(o) if isinstance(o, Path) else list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
