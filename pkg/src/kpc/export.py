"""Byte-exact CSV and PGM writers.

Floats are written with 17 significant digits (enough to round-trip any
double) and every line ends in LF, so output depends only on the values.
"""
from __future__ import annotations

import io
import warnings

import numpy as np

from .errors import DegenerateRange
from .model import ScalarField
from .regularization import regularize_field

CSV_HEADER = "x,y,f,F,mask"


def _g17(v) -> str:
    return format(float(v), ".17g")


def _write(path, data: bytes):
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as e:
        raise OSError(e.errno, f"cannot write {path}: {e.strerror}") from None


def csv_bytes(fld: ScalarField) -> bytes:
    X, Y = fld.grid.mesh()
    F = regularize_field(fld).values
    buf = io.StringIO(newline="")
    buf.write(CSV_HEADER + "\n")
    mask = fld.mask.astype(np.int8)
    for x, y, f, r, m in zip(X.ravel(), Y.ravel(), fld.values.ravel(), F.ravel(), mask.ravel()):
        buf.write(f"{_g17(x)},{_g17(y)},{_g17(f)},{_g17(r)},{m}\n")
    return buf.getvalue().encode("ascii")


def export_csv(fld: ScalarField, path) -> None:
    """One row per sample, row-major (x fastest), y increasing."""
    _write(path, csv_bytes(fld))


def read_csv(path) -> dict:
    """Columns of a file written by export_csv as float arrays (mask as bool)."""
    with open(path, "r", encoding="ascii", newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    cols = list(zip(*rows)) if rows else [()] * 5
    out = {k: np.array([float(v) for v in c]) for k, c in zip(("x", "y", "f", "F"), cols)}
    out["mask"] = np.array([v == "1" for v in cols[4]], dtype=bool)
    return out


def pgm_bytes(fld: ScalarField, range=None) -> bytes:
    """P5 image; v -> rint(255 (clamp(v) - lo) / (hi - lo)), masked cells 0,
    top row is the largest y. A degenerate range gives mid-gray and warns."""
    vals = fld.values
    ok = ~fld.mask & np.isfinite(vals)
    if range is None:
        lo, hi = (float(vals[ok].min()), float(vals[ok].max())) if ok.any() else (0.0, 0.0)
    else:
        lo, hi = (float(v) for v in range)
    if hi == lo:
        warnings.warn(str(DegenerateRange(f"value range [{lo}, {hi}] is empty")), RuntimeWarning,
                      stacklevel=3)
        img = np.full(vals.shape, 128, dtype=np.uint8)
    else:
        if hi < lo:
            raise ValueError("range must satisfy lo < hi")
        with np.errstate(invalid="ignore"):
            scaled = 255.0 * (np.clip(vals, lo, hi) - lo) / (hi - lo)
        img = np.where(ok, np.rint(np.nan_to_num(scaled)), 0).astype(np.uint8)
    img = np.where(fld.mask, 0, img).astype(np.uint8)[::-1]
    ny, nx = img.shape
    return f"P5\n{nx} {ny}\n255\n".encode("ascii") + img.tobytes()


def export_pgm(fld: ScalarField, path, range=None) -> None:
    _write(path, pgm_bytes(fld, range))


def read_pgm(path) -> np.ndarray:
    """Pixel array of a P5 file written by export_pgm (top row first)."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or parts[2] != b"255":
        raise ValueError(f"{path}: not an 8-bit P5 image")
    nx, ny = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(ny, nx)


def table_bytes(header, rows) -> bytes:
    """Generic CSV: floats at 17 digits, ints and strings verbatim."""
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return str(int(v))
        if isinstance(v, (int, np.integer, str)):
            return str(v)
        return _g17(v)
    lines = [",".join(header)] + [",".join(cell(v) for v in r) for r in rows]
    return ("\n".join(lines) + "\n").encode("ascii")


def export_table(path, header, rows) -> None:
    _write(path, table_bytes(header, rows))
