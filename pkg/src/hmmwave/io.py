"""CSV emission.  Floats are written with 17 significant digits so they round-trip."""

from __future__ import annotations

import csv
import sys
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .wave_core import Trajectory


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_rows(out: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        write_rows(fh, header, rows)
    return path


def emit(path, header, rows) -> None:
    """Write to ``path``, or to stdout when ``path`` is None or '-'."""
    if path is None or str(path) == "-":
        write_rows(sys.stdout, header, rows)
    else:
        write_csv(path, header, rows)


def snapshot_name(run: str, t: float) -> str:
    return f"{run}_t{t:.6f}.csv"


def write_snapshots(traj: Trajectory, out_dir, run: str) -> list[Path]:
    """One ``x,u`` CSV per stored time level, named ``<run>_t<time>.csv``."""
    x = traj.grid.nodes
    return [
        write_csv(Path(out_dir) / snapshot_name(run, t), ("x", "u"), zip(x, u))
        for t, u in zip(traj.times, traj.states)
    ]


def read_snapshot(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
