"""Delimited-text datasets, loss curves, residual grids and run manifests.

Floats are written with 17 significant digits so a write/read cycle is
exact. Headers are fixed and checked on read.
"""

import csv
import json
import platform
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import UsageError

DATASET_HEADER = ("x", "t", "u1", "v1", "u2", "v2")
LOSS_HEADER = ("phase", "iteration", "loss0", "lossb", "lossf", "total")
RESIDUAL_HEADER = ("x", "t", "score")
POINTS_HEADER = ("x", "t")
MAGNITUDE_HEADER = ("x", "t", "h1_pred", "h2_pred", "h1_exact", "h2_exact", "h1_abs_error", "h2_abs_error")


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_table(path, header: Sequence[str], rows) -> Path:
    """Write a numeric table with a one-line header."""
    path = Path(path)
    rows = np.asarray(rows, dtype=np.float64).reshape(-1, len(header))
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r) + "\n")
    return path


def read_table(path, header: Sequence[str]) -> np.ndarray:
    """Read a numeric table, checking the header; errors name the line."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"{path}: no such file")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise UsageError(f"{path}: empty file") from None
        if tuple(h.strip() for h in got) != tuple(header):
            raise UsageError(f"{path}:1: expected header {','.join(header)}, got {','.join(got)}")
        out = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise UsageError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                out.append([float(v) for v in rec])
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    return np.asarray(out, dtype=np.float64).reshape(-1, len(header))


def write_dataset(path, rows) -> Path:
    return write_table(path, DATASET_HEADER, rows)


def read_dataset(path) -> np.ndarray:
    return read_table(path, DATASET_HEADER)


def write_losses(path, records: Iterable) -> Path:
    """Loss curve rows ``(phase, iteration, loss0, lossb, lossf, total)``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(LOSS_HEADER) + "\n")
        for r in records:
            phase, it, *vals = r
            fh.write(f"{phase},{int(it)}," + ",".join(fmt(v) for v in vals) + "\n")
    return path


def read_losses(path) -> list[tuple]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, [])
        if tuple(got) != LOSS_HEADER:
            raise UsageError(f"{path}:1: expected header {','.join(LOSS_HEADER)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                rows.append((rec[0], int(rec[1]), *(float(v) for v in rec[2:6])))
            except (ValueError, IndexError) as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    return rows


def magnitudes(fields: np.ndarray) -> np.ndarray:
    """|h1|, |h2| columns from u1, v1, u2, v2 columns."""
    f = np.asarray(fields, dtype=np.float64)
    return np.column_stack([np.hypot(f[:, 0], f[:, 1]), np.hypot(f[:, 2], f[:, 3])])


def relative_l2(pred, exact) -> tuple[float, float]:
    """Relative L2 error of |h1| and |h2| over all rows.

    Both arguments are (N, 4) arrays of u1, v1, u2, v2.
    """
    p = np.asarray(pred, dtype=np.float64)
    e = np.asarray(exact, dtype=np.float64)
    if p.shape != e.shape or p.ndim != 2 or p.shape[1] != 4:
        raise UsageError(f"prediction {p.shape} and exact {e.shape} must both be (N, 4)")
    mp, me = magnitudes(p), magnitudes(e)
    out = []
    for k in range(2):
        norm = np.linalg.norm(me[:, k])
        if norm == 0:
            raise UsageError(f"exact |h{k + 1}| is identically zero")
        out.append(float(np.linalg.norm(mp[:, k] - me[:, k]) / norm))
    return out[0], out[1]


def versions() -> dict[str, str]:
    import scipy

    from . import __version__
    from ._accel import HAVE_NUMBA, numba_enabled

    out = {
        "rarpinn": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba_kernels": str(HAVE_NUMBA and numba_enabled()).lower(),
    }
    if HAVE_NUMBA:
        import numba

        out["numba"] = numba.__version__
    return out


def write_manifest(path, config: dict, seeds: dict, extra: dict | None = None) -> Path:
    """JSON record of the expanded configuration, seeds and library versions."""
    doc = {"config": config, "seeds": seeds, "versions": versions()}
    if extra:
        doc.update(extra)
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
