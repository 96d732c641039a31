"""Manufactured solutions, error norms and observed convergence orders."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid, cell_centers
from .krylov import KrylovConfig
from .stepper import StepperConfig, initialize, step_verification

log = logging.getLogger(__name__)


def _bump(s):
    """``s^2 (1 - s)^2`` with first and second derivatives."""
    return s * s * (1 - s) ** 2, 2 * s * (1 - s) * (1 - 2 * s), 2 * (1 - 6 * s + 6 * s * s)


def _phase(points: np.ndarray, dim: int):
    """Phase ``theta`` with its gradient-squared and Laplacian.

    ``points`` has a trailing axis of 3 coordinates. 1D: ``theta = xb``
    (y and z ignored); 3D: ``theta = xb * yb * zb``.
    """
    points = np.asarray(points, dtype=float)
    if dim == 1:
        b, b1, b2 = _bump(points[..., 0])
        return b, b1 * b1, b2
    bx, bx1, bx2 = _bump(points[..., 0])
    by, by1, by2 = _bump(points[..., 1])
    bz, bz1, bz2 = _bump(points[..., 2])
    theta = bx * by * bz
    grad2 = (bx1 * by * bz) ** 2 + (bx * by1 * bz) ** 2 + (bx * by * bz1) ** 2
    lap = bx2 * by * bz + bx * by2 * bz + bx * by * bz2
    return theta, grad2, lap


def _profile(theta, t):
    s, c = np.sin(t), np.cos(t)
    ct, st = np.cos(theta), np.sin(theta)
    m = np.stack([ct * s, st * s, np.full_like(theta, c)], axis=-1)
    m_t = np.stack([ct * c, st * c, np.full_like(theta, -s)], axis=-1)
    m_tt = -m
    u_theta = np.stack([-st * s, ct * s, np.zeros_like(theta)], axis=-1)
    u_thth = np.stack([-ct * s, -st * s, np.zeros_like(theta)], axis=-1)
    return m, m_t, m_tt, u_theta, u_thth


def exact_solution_1d(x, t):
    """``(cos xb sin t, sin xb sin t, cos t)`` with ``xb = x^2 (1-x)^2``."""
    theta = _bump(np.asarray(x, float))[0]
    return _profile(theta, t)[0]


def exact_solution_3d(x, y, z, t):
    pts = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)), axis=-1)
    theta, _, _ = _phase(pts, 3)
    return _profile(theta, t)[0]


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution and matching source for the test equation

        m_t = -m x Lap m + alpha m x (m_t + eta m_tt) + g        (form="cross")
        m_t = -m x Lap m + alpha (m_t + eta m_tt) + g            (form="linear")
    """

    dimensionality: int = 1
    alpha: float = 0.0
    eta: float = 0.0
    final_time: float = 0.5
    form: str = "cross"

    def __post_init__(self):
        if self.dimensionality not in (1, 3):
            raise ValueError(f"dimensionality must be 1 or 3, got {self.dimensionality}")
        if self.form not in ("cross", "linear"):
            raise ValueError(f"unknown form {self.form!r}")

    def _parts(self, points, t):
        theta, grad2, lap = _phase(points, self.dimensionality)
        m, m_t, m_tt, u1, u2 = _profile(theta, t)
        lap_m = lap[..., None] * u1 + grad2[..., None] * u2
        return m, m_t, m_tt, lap_m

    def exact(self, points, t) -> np.ndarray:
        return self._parts(points, t)[0]

    def derivatives(self, points, t):
        """``(m, m_t, m_tt, Lap m)`` from closed-form expressions."""
        return self._parts(points, t)

    def source(self, points, t) -> np.ndarray:
        m, m_t, m_tt, lap_m = self._parts(points, t)
        damping = m_t + self.eta * m_tt
        if self.form == "cross":
            damping = np.cross(m, damping)
        return m_t + np.cross(m, lap_m) - self.alpha * damping


def source_term(case: ManufacturedCase, x, t) -> np.ndarray:
    return case.source(x, t)


def linf_error(numeric: np.ndarray, exact: np.ndarray) -> float:
    numeric, exact = np.asarray(numeric), np.asarray(exact)
    if numeric.shape != exact.shape:
        raise ValueError(f"shape mismatch: {numeric.shape} vs {exact.shape}")
    return float(np.max(np.abs(numeric - exact)))


def convergence_order(errors, resolutions) -> float:
    """Least-squares slope of ``log(error)`` against ``log(step size)``."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(resolutions, dtype=float)
    if e.size < 2 or e.size != h.size:
        raise ValueError("need at least two (error, resolution) pairs of equal length")
    if np.any(e <= 0) or np.any(h <= 0):
        raise ValueError("errors and resolutions must be positive")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def case_grid(case: ManufacturedCase, n_cells: int, box: float = 1.0) -> Grid:
    h = box / n_cells
    if case.dimensionality == 1:
        return Grid(n_cells, 1, 1, h, 1.0, 1.0)
    return Grid(n_cells, n_cells, n_cells, h, h, h)


def run_manufactured(
    case: ManufacturedCase,
    n_cells: int,
    n_steps: int,
    box: float = 1.0,
    linear_solver: str = "direct",
    krylov: KrylovConfig = KrylovConfig(),
) -> float:
    """Integrate ``case`` to its final time; return the L-infinity error.

    The two starting levels are the exact solution at ``t = 0`` and ``t = dt``.
    """
    grid = case_grid(case, n_cells, box)
    dt = case.final_time / n_steps
    pts = cell_centers(grid)
    cfg = StepperConfig(
        epsilon=1.0,
        alpha=case.alpha,
        eta=case.eta,
        dt=dt,
        krylov=krylov,
        mode="verification",
        linear_solver=linear_solver,
        verification_form=case.form,
    )
    state = initialize(grid, case.exact(pts, 0.0), dt, case.exact(pts, dt))
    while state.step < n_steps:
        state = step_verification(state, lambda t: case.source(pts, t), cfg)
    return linf_error(state.m_curr, case.exact(pts, state.time))


@dataclass
class ConvergenceTable:
    label: str
    kind: str  # "time" or "space"
    resolutions: list[int]
    step_sizes: list[float]
    errors: list[float]

    @property
    def order(self) -> float:
        return convergence_order(self.errors, self.step_sizes)

    def rows(self):
        return [
            {"resolution": n, "step": h, "error": e}
            for n, h, e in zip(self.resolutions, self.step_sizes, self.errors)
        ]


def temporal_sweep(case, nts, n_cells, box=1.0, label="", **kw) -> ConvergenceTable:
    errs = []
    for nt in nts:
        errs.append(run_manufactured(case, n_cells, nt, box, **kw))
        log.info("%s nt=%d error=%.3e", label, nt, errs[-1])
    return ConvergenceTable(label, "time", list(nts), [case.final_time / nt for nt in nts], errs)


def spatial_sweep(case, nxs, n_steps, box=1.0, label="", **kw) -> ConvergenceTable:
    errs = []
    for nx in nxs:
        errs.append(run_manufactured(case, nx, n_steps, box, **kw))
        log.info("%s nx=%d error=%.3e", label, nx, errs[-1])
    return ConvergenceTable(label, "space", list(nxs), [box / nx for nx in nxs], errs)


def write_convergence_csv(tables, path) -> Path:
    """One row per resolution; the fitted order is repeated on every row of its table."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "kind", "resolution", "error", "order"])
        for tab in tables:
            order = tab.order
            for n, e in zip(tab.resolutions, tab.errors):
                w.writerow([tab.label, tab.kind, n, repr(e), repr(order)])
    return path
