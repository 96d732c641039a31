"""Cell-centered structured grid and the Neumann Laplacian stencil.

Vector fields are plain ``numpy`` arrays of shape ``(nx, ny, nz, 3)``. The
canonical linear layout (used by serializers and flattened solver vectors)
runs x fastest, then y, then z; see :func:`flatten` / :func:`unflatten`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-13


@dataclass(frozen=True)
class Grid:
    """Uniform mesh of ``nx * ny * nz`` cells.

    Spacings are dimensionless (physical spacing divided by ``L``).
    """

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    L: float = 1.0

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("dx", "dy", "dz"):
            if not float(getattr(self, name)) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape + (3,))

    def uniform(self, v) -> np.ndarray:
        out = self.zeros()
        out[...] = np.asarray(v, dtype=float)
        return out

    def check(self, field: np.ndarray, name: str = "field") -> None:
        if np.shape(field) != self.shape + (3,):
            raise ValueError(
                f"{name} has shape {np.shape(field)}, expected {self.shape + (3,)}"
            )


def cell_centers(grid: Grid) -> np.ndarray:
    """Cell-center coordinates, shape ``(nx, ny, nz, 3)``.

    Index ``(j, k, l)`` (0-based) sits at ``((j + 1/2) dx, (k + 1/2) dy, (l + 1/2) dz)``.
    """
    axes = [
        (np.arange(n) + 0.5) * d
        for n, d in zip(grid.shape, grid.spacing)
    ]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return np.stack([X, Y, Z], axis=-1)


def apply_laplacian(grid: Grid, field: np.ndarray) -> np.ndarray:
    """Second-order centered Laplacian with homogeneous Neumann closure.

    Out-of-domain neighbours take the value of the adjacent interior cell, so
    boundary faces carry zero flux. Works on any trailing component count.
    """
    field = np.asarray(field)
    if field.shape[:3] != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    out = np.zeros(field.shape, dtype=np.result_type(field, float))
    for axis, h in enumerate(grid.spacing):
        if field.shape[axis] < 2:
            continue
        flux = np.diff(field, axis=axis) / (h * h)
        lo = [slice(None)] * field.ndim
        hi = [slice(None)] * field.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        out[tuple(lo)] += flux
        out[tuple(hi)] -= flux
    return out


def spatial_average(field: np.ndarray) -> np.ndarray:
    field = np.asarray(field)
    if field.size == 0:
        raise ValueError("cannot average an empty field")
    return field.reshape(-1, field.shape[-1]).mean(axis=0)


def flatten(field: np.ndarray) -> np.ndarray:
    """Field -> ``(N, 3)`` rows in x-fastest order."""
    return np.ascontiguousarray(np.transpose(field, (2, 1, 0, 3))).reshape(-1, field.shape[-1])


def unflatten(grid: Grid, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows)
    ncomp = rows.size // grid.n_cells
    if rows.size != grid.n_cells * ncomp:
        raise ValueError(f"{rows.size} values do not fit grid {grid.shape}")
    return np.ascontiguousarray(
        rows.reshape(grid.nz, grid.ny, grid.nx, ncomp).transpose(2, 1, 0, 3)
    )


def normalize(field: np.ndarray, min_norm: float = 1e-8) -> np.ndarray:
    """Project each cell vector onto the unit sphere.

    Raises ``FloatingPointError`` if any cell has norm below ``min_norm``.
    """
    norms = np.linalg.norm(field, axis=-1, keepdims=True)
    if np.any(~np.isfinite(norms)) or norms.min() < min_norm:
        bad = int(np.argmin(np.where(np.isfinite(norms), norms, -1.0)))
        raise FloatingPointError(
            f"cell norm {norms.ravel()[bad]:.3e} below {min_norm:g} at flat index {bad}"
        )
    return field / norms


def unit_deviation(field: np.ndarray) -> float:
    """Largest ``| |m| - 1 |`` over all cells."""
    return float(np.max(np.abs(np.linalg.norm(field, axis=-1) - 1.0)))


def check_unit(field: np.ndarray, tol: float = UNIT_TOL, name: str = "field") -> None:
    dev = unit_deviation(field)
    if dev > tol:
        raise ValueError(f"{name} is not unit length per cell (max deviation {dev:.3e} > {tol:g})")
