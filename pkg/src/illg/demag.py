"""Stray field from the cell-averaged demagnetization tensor.

The tensor for a pair of uniformly magnetized rectangular cells follows
Newell, Williams & Dunlop (1993): a 27-point second difference of the
auxiliary functions ``f`` (diagonal) and ``g`` (off-diagonal). Far from the
source cell the analytic form loses digits to cancellation, so offsets
beyond ``FAR_FIELD_DIAGONALS`` cell diagonals use the point-dipole tensor.

Sign convention: ``h_s = -N * m`` with ``trace N(0) = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .grid import Grid

FAR_FIELD_DIAGONALS = 30.0

# (Nxx, Nyy, Nzz, Nxy, Nxz, Nyz)
COMPONENTS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def _term(prefactor, func, num, den):
    """``prefactor * func(num / den)`` with the removable singularity ``den = 0`` -> 0."""
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, prefactor * func(num / safe), 0.0)


def newell_f(x, y, z):
    x, y, z = np.abs(x), np.abs(y), np.abs(z)
    x2, y2, z2 = x * x, y * y, z * z
    R = np.sqrt(x2 + y2 + z2)
    return (
        _term(0.5 * y * (z2 - x2), np.arcsinh, y, np.sqrt(x2 + z2))
        + _term(0.5 * z * (y2 - x2), np.arcsinh, z, np.sqrt(x2 + y2))
        - _term(x * y * z, np.arctan, y * z, x * R)
        + (2.0 * x2 - y2 - z2) * R / 6.0
    )


def newell_g(x, y, z):
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.abs(z)
    x2, y2, z2 = x * x, y * y, z * z
    R = np.sqrt(x2 + y2 + z2)
    return (
        _term(x * y * z, np.arcsinh, z, np.sqrt(x2 + y2))
        + _term(y * (3.0 * z2 - y2) / 6.0, np.arcsinh, x, np.sqrt(y2 + z2))
        + _term(x * (3.0 * z2 - x2) / 6.0, np.arcsinh, y, np.sqrt(x2 + z2))
        - _term(z2 * z / 6.0, np.arctan, x * y, z * R)
        - _term(0.5 * z * y2, np.arctan, x * z * np.sign(y), np.abs(y) * R)
        - _term(0.5 * z * x2, np.arctan, y * z * np.sign(x), np.abs(x) * R)
        - x * y * R / 3.0
    )


def newell_tensor(ix, iy, iz, cell) -> np.ndarray:
    """Demag tensor for integer cell offsets ``(ix, iy, iz)`` (broadcastable arrays).

    Returns an array with trailing axis of length 6 in ``COMPONENTS`` order.
    ``cell`` is ``(dx, dy, dz)`` in any consistent length unit.

    Values are computed at ``(|ix|, |iy|, |iz|)`` and the parity of each
    component is applied afterwards (diagonal terms even, ``N_ij`` odd in
    offsets ``i`` and ``j``), so the kernel symmetry holds bit for bit rather
    than to the round-off of the difference formulas.
    """
    ix, iy, iz = np.broadcast_arrays(
        np.asarray(ix, float), np.asarray(iy, float), np.asarray(iz, float)
    )
    signs = (np.sign(ix), np.sign(iy), np.sign(iz))
    ix, iy, iz = np.abs(ix), np.abs(iy), np.abs(iz)
    cell = np.asarray(cell, float)
    cell = cell / cell.max()
    dx, dy, dz = cell
    vol = dx * dy * dz
    out = np.zeros(ix.shape + (6,))

    r = np.sqrt((ix * dx) ** 2 + (iy * dy) ** 2 + (iz * dz) ** 2)
    far = r > FAR_FIELD_DIAGONALS * np.linalg.norm(cell)
    near = ~far

    if np.any(near):
        nx_, ny_, nz_ = ix[near], iy[near], iz[near]
        shifts = np.array([-1.0, 0.0, 1.0])
        X = (nx_[:, None, None, None] + shifts[None, :, None, None]) * dx
        Y = (ny_[:, None, None, None] + shifts[None, None, :, None]) * dy
        Z = (nz_[:, None, None, None] + shifts[None, None, None, :]) * dz
        w = np.array([-1.0, 2.0, -1.0])
        W = w[:, None, None] * w[None, :, None] * w[None, None, :]
        scale = 1.0 / (4.0 * np.pi * vol)
        vals = [
            newell_f(X, Y, Z),
            newell_f(Y, Z, X),
            newell_f(Z, X, Y),
            newell_g(X, Y, Z),
            newell_g(X, Z, Y),
            newell_g(Y, Z, X),
        ]
        for c, v in enumerate(vals):
            out[near, c] = scale * np.einsum("nijk,ijk->n", v, W)

    if np.any(far):
        rx, ry, rz = ix[far] * dx, iy[far] * dy, iz[far] * dz
        rr = r[far]
        pre = vol / (4.0 * np.pi * rr ** 5)
        d = (rx, ry, rz)
        for c, (i, j) in enumerate(COMPONENTS):
            val = 3.0 * d[i] * d[j]
            if i == j:
                val = val - rr ** 2
            out[far, c] = -pre * val

    for c, (i, j) in enumerate(COMPONENTS):
        if i != j:
            out[..., c] *= signs[i] * signs[j]
    return out


@dataclass(frozen=True, eq=False)
class DemagKernel:
    grid: Grid
    cell: tuple[float, float, float]
    padded_shape: tuple[int, int, int]
    spectrum: np.ndarray  # (6, Px, Py, Pz//2 + 1), real

    def self_tensor(self) -> np.ndarray:
        """3x3 tensor at zero offset."""
        return tensor_matrix(newell_tensor(0, 0, 0, self.cell))


def tensor_matrix(comp) -> np.ndarray:
    comp = np.asarray(comp)
    N = np.empty(comp.shape[:-1] + (3, 3))
    for c, (i, j) in enumerate(COMPONENTS):
        N[..., i, j] = comp[..., c]
        N[..., j, i] = comp[..., c]
    return N


def padded_shape(grid: Grid) -> tuple[int, int, int]:
    """Smallest FFT-friendly lengths ``>= 2n - 1`` that avoid circular aliasing."""
    return tuple(1 if n == 1 else sfft.next_fast_len(2 * n - 1, real=True) for n in grid.shape)


def real_space_kernel(grid: Grid, cell, shape=None) -> np.ndarray:
    """Kernel on the padded domain with wrap-around offsets, shape ``(6, Px, Py, Pz)``.

    Index ``k < n`` holds offset ``k``, index ``k > P - n`` holds offset
    ``k - P``; anything in between is never reached by a physical pair and is
    zero.
    """
    P = padded_shape(grid) if shape is None else tuple(shape)
    idx, unused = [], []
    for n, p in zip(grid.shape, P):
        if p < 2 * n - 1:
            raise ValueError(f"padded length {p} < 2n - 1 = {2 * n - 1}")
        k = np.arange(p)
        idx.append(np.where(k < n, k, k - p).astype(float))
        unused.append((k >= n) & (k <= p - n))
    IX, IY, IZ = np.meshgrid(*idx, indexing="ij")
    comp = newell_tensor(IX, IY, IZ, cell)
    for axis, mask in enumerate(unused):
        sl = [slice(None)] * 3
        sl[axis] = mask
        comp[tuple(sl)] = 0.0
    return np.moveaxis(comp, -1, 0)


def build_demag_kernel(grid: Grid, cell_dims) -> DemagKernel:
    """Precompute the zero-padded spectral demag kernel for ``grid``.

    ``cell_dims`` are the physical cell edge lengths; only their ratios matter.
    """
    cell = tuple(float(c) for c in cell_dims)
    if len(cell) != 3 or min(cell) <= 0:
        raise ValueError(f"cell dimensions must be three positive lengths, got {cell_dims}")
    P = padded_shape(grid)
    if np.prod(P, dtype=float) * 6 * 16 > 2**34:
        raise MemoryError(f"padded demag domain {P} is too large")
    K = real_space_kernel(grid, cell, P)
    # diagonal components are even and off-diagonal ones odd in exactly two
    # offsets, so the transform is real up to round-off
    spectrum = np.ascontiguousarray(sfft.rfftn(K, axes=(1, 2, 3)).real)
    return DemagKernel(grid=grid, cell=cell, padded_shape=P, spectrum=spectrum)


def stray_field(kernel: DemagKernel, m: np.ndarray) -> np.ndarray:
    """``h_s = -N * m`` by zero-padded FFT convolution.

    Transforms run one axis at a time so the all-zero padding is never
    transformed on the way in, and the discarded half never on the way out.
    """
    grid = kernel.grid
    grid.check(m, "m")
    P = kernel.padded_shape
    nx, ny, nz = grid.shape
    a = sfft.rfft(m, n=P[2], axis=2)
    a = sfft.fft(a, n=P[1], axis=1)
    a = sfft.fft(a, n=P[0], axis=0)
    S = kernel.spectrum
    h = np.empty_like(a)
    h[..., 0] = S[0] * a[..., 0] + S[3] * a[..., 1] + S[4] * a[..., 2]
    h[..., 1] = S[3] * a[..., 0] + S[1] * a[..., 1] + S[5] * a[..., 2]
    h[..., 2] = S[4] * a[..., 0] + S[5] * a[..., 1] + S[2] * a[..., 2]
    h = sfft.ifft(h, axis=0)[:nx]
    h = sfft.ifft(h, axis=1)[:, :ny]
    return -sfft.irfft(h, n=P[2], axis=2)[:, :, :nz]


def stray_field_direct(grid: Grid, cell_dims, m: np.ndarray) -> np.ndarray:
    """Brute-force pairwise summation; intended for small grids only."""
    grid.check(m, "m")
    cells = np.argwhere(np.ones(grid.shape, bool))
    h = np.zeros(grid.shape + (3,))
    cache: dict[tuple[int, int, int], np.ndarray] = {}
    for i in cells:
        acc = np.zeros(3)
        for j in cells:
            off = tuple(int(v) for v in i - j)
            N = cache.get(off)
            if N is None:
                N = tensor_matrix(newell_tensor(*off, cell_dims))
                cache[off] = N
            acc -= N @ m[tuple(j)]
        h[tuple(i)] = acc
    return h


def stray_energy_density(m: np.ndarray, h_s: np.ndarray) -> float:
    """``-1/2 sum m . h_s`` per unit cell volume."""
    return -0.5 * float(np.sum(m * h_s))
