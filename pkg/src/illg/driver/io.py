"""Plain-text snapshots and CSV writers.

Snapshot layout::

    # nx ny nz dx dy dz time
    j k l x y z mx my mz        (one line per cell, x index fastest)

Indices are 1-based, coordinates are cell centres. Every float is written
with 17 significant digits so a read reproduces the field bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..grid import Grid, cell_centers, flatten, unflatten

TIMESERIES_HEADER = ("step", "t", "mx", "my", "mz", "F", "J", "gmres_iters")
HYSTERESIS_HEADER = ("branch", "field_T", "mx", "my", "mz", "steps_to_steady", "converged")


def _g(x: float) -> str:
    return "%.17g" % x


def write_snapshot(grid: Grid, m: np.ndarray, time: float, path, scale: float = 1.0) -> Path:
    """Dump ``m`` on ``grid`` to ``path``.

    ``scale`` multiplies spacings and coordinates (pass ``grid.L`` for metres).
    """
    grid.check(m, "m")
    path = Path(path)
    nx, ny, nz = grid.shape
    centers = flatten(cell_centers(grid)) * scale
    rows = flatten(m)
    jj, kk, ll = np.meshgrid(np.arange(1, nx + 1), np.arange(1, ny + 1), np.arange(1, nz + 1), indexing="ij")
    idx = flatten(np.stack([jj, kk, ll], axis=-1))
    with path.open("w") as fh:
        head = [str(nx), str(ny), str(nz)] + [_g(h * scale) for h in grid.spacing] + [_g(time)]
        fh.write("# " + " ".join(head) + "\n")
        for (j, k, l), c, v in zip(idx, centers, rows):
            fh.write(f"{j} {k} {l} " + " ".join(_g(x) for x in (*c, *v)) + "\n")
    return path


@dataclass(frozen=True)
class Snapshot:
    grid: Grid
    m: np.ndarray
    time: float


def read_snapshot(path) -> Snapshot:
    """Inverse of :func:`write_snapshot`; spacings are returned as written."""
    path = Path(path)
    with path.open() as fh:
        head = fh.readline()
        if not head.startswith("#"):
            raise ValueError(f"{path}: missing snapshot header")
        parts = head[1:].split()
        if len(parts) != 7:
            raise ValueError(f"{path}: header must hold nx ny nz dx dy dz time")
        nx, ny, nz = (int(p) for p in parts[:3])
        dx, dy, dz, time = (float(p) for p in parts[3:])
        data = np.loadtxt(fh, ndmin=2)
    grid = Grid(nx, ny, nz, dx, dy, dz)
    if data.shape != (grid.n_cells, 9):
        raise ValueError(f"{path}: expected {grid.n_cells} rows of 9 columns, got {data.shape}")
    return Snapshot(grid, unflatten(grid, data[:, 6:9]), time)


class TimeSeriesWriter:
    """Streams time-series rows to CSV; rejects non-increasing steps."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(TIMESERIES_HEADER)
        self._last = None
        self.rows: list[tuple] = []

    def write(self, step: int, t: float, m_avg, F: float, J: float, iters: int) -> None:
        if self._last is not None and step <= self._last:
            raise ValueError(f"time-series steps must increase ({step} after {self._last})")
        self._last = step
        row = (int(step), float(t), *(float(c) for c in m_avg), float(F), float(J), int(iters))
        self.rows.append(row)
        self._w.writerow([row[0]] + [_g(x) for x in row[1:7]] + [row[7]])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_timeseries(path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return {name: data[name] for name in data.dtype.names}


def write_hysteresis(rows, path) -> Path:
    """``rows`` are :class:`~illg.driver.scenarios.LoopPoint` records."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HYSTERESIS_HEADER)
        for r in rows:
            w.writerow([r.branch, _g(r.field_T), *(_g(c) for c in r.m_avg), r.steps_to_steady, int(r.converged)])
    return path


def write_audit(records, path) -> Path:
    """Per-step audit log: step, unit-norm deviation, dot-identity error, GMRES iterations."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "unit_dev", "dot_identity_err", "gmres_iters"])
        for step, dev, dot, it in records:
            w.writerow([step, _g(dev), _g(dot), it])
    return path
