"""Material parameters, rescaling to dimensionless units and local fields."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demag import stray_field
from .grid import Grid, apply_laplacian

MU0 = 4e-7 * math.pi
GAMMA_E = 1.76086e11  # electron gyromagnetic ratio, 1/(s T)

AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class MaterialParams:
    Ms: float
    A_ex: float
    Ku: float
    alpha: float
    tau: float
    gamma: float = GAMMA_E
    mu0: float = MU0

    def __post_init__(self):
        problems = []
        if not self.Ms > 0:
            problems.append(f"Ms must be > 0 (got {self.Ms})")
        for name in ("A_ex", "Ku", "alpha", "tau"):
            if not getattr(self, name) >= 0:
                problems.append(f"{name} must be >= 0 (got {getattr(self, name)})")
        for name in ("gamma", "mu0"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0 (got {getattr(self, name)})")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class DimensionlessParams:
    epsilon: float
    q: float
    eta: float
    t_unit: float  # seconds per dimensionless time unit


def nondimensionalize(params: MaterialParams, L: float, dt_phys: float = 0.0):
    """Return ``(DimensionlessParams, dt)`` for a sample of diameter ``L`` (m)."""
    if not L > 0:
        raise ValueError(f"L must be > 0 (got {L})")
    energy_density = params.mu0 * params.Ms ** 2
    rate = params.mu0 * params.gamma * params.Ms
    dimless = DimensionlessParams(
        epsilon=params.A_ex / (energy_density * L * L),
        q=params.Ku / energy_density,
        eta=params.tau * rate,
        t_unit=1.0 / rate,
    )
    return dimless, dt_phys * rate


@dataclass(frozen=True)
class AppliedFieldSpec:
    """Uniform applied field: a constant part plus a windowed sine pulse.

    ``constant`` and ``pulse_amplitude`` are in units of Ms; frequency and
    window are physical (Hz, s). The window is closed on the left and open on
    the right.
    """

    constant: tuple[float, float, float] = (0.0, 0.0, 0.0)
    pulse_amplitude: float = 0.0
    pulse_frequency: float = 0.0
    pulse_direction: tuple[float, float, float] = (0.0, 1.0, 0.0)
    pulse_window: tuple[float, float] = (0.0, 0.0)
    canting: float | None = None

    def __post_init__(self):
        t0, t1 = self.pulse_window
        if t1 < t0:
            raise ValueError(f"pulse_window {self.pulse_window} is not ordered")
        n = math.sqrt(sum(c * c for c in self.pulse_direction))
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"pulse_direction must be unit length (|d| = {n})")


def applied_field_at(t: float, spec: AppliedFieldSpec) -> np.ndarray:
    """Applied field (units of Ms) at physical time ``t`` seconds."""
    h = np.array(spec.constant, dtype=float)
    t0, t1 = spec.pulse_window
    if spec.pulse_amplitude != 0.0 and t0 <= t < t1:
        s = spec.pulse_amplitude * math.sin(2.0 * math.pi * spec.pulse_frequency * t)
        h = h + s * np.asarray(spec.pulse_direction, dtype=float)
    return h


def canted_field(magnitude: float, axis: str, canting_deg: float) -> np.ndarray:
    """In-plane field of given magnitude along ``axis`` rotated by ``canting_deg``."""
    phi = math.radians(canting_deg)
    if axis in ("long", "x"):
        return magnitude * np.array([math.cos(phi), math.sin(phi), 0.0])
    if axis in ("short", "y"):
        return magnitude * np.array([-math.sin(phi), math.cos(phi), 0.0])
    raise ValueError(f"unknown sweep axis {axis!r}")


def transverse(m: np.ndarray, axis: str = "x") -> np.ndarray:
    """Components of ``m`` perpendicular to the easy axis (the easy component zeroed)."""
    out = np.array(m, dtype=float, copy=True)
    out[..., AXES[axis]] = 0.0
    return out


def local_field(
    m: np.ndarray,
    h_applied,
    h_stray: np.ndarray | None,
    q: float,
    axis: str = "x",
) -> np.ndarray:
    """Anisotropy + applied + stray contributions to the effective field."""
    m = np.asarray(m, dtype=float)
    if h_stray is not None and np.shape(h_stray) != m.shape:
        raise ValueError(f"stray field shape {np.shape(h_stray)} != m shape {m.shape}")
    f = -q * transverse(m, axis) + np.asarray(h_applied, dtype=float)
    if h_stray is not None:
        f = f + h_stray
    return f


def effective_field(grid: Grid, m: np.ndarray, epsilon: float, local: np.ndarray) -> np.ndarray:
    grid.check(m, "m")
    grid.check(local, "local field")
    return epsilon * apply_laplacian(grid, m) + local


class FieldModel:
    """Non-exchange field ``f(m, t)`` used by the stepper, plus its parts.

    ``t`` is dimensionless; ``t_unit`` converts it to seconds for the pulse.
    The stray field of the most recent ``m`` array is cached so that energy
    diagnostics on the same state do not repeat the convolution.
    """

    def __init__(self, q, axis="x", applied=None, t_unit=1.0, kernel=None):
        self.q = q
        self.axis = axis
        self.applied = applied if applied is not None else AppliedFieldSpec()
        self.t_unit = t_unit
        self.kernel = kernel
        self._cache = (None, None)

    def applied_at(self, t: float) -> np.ndarray:
        return applied_field_at(t * self.t_unit, self.applied)

    def stray(self, m: np.ndarray) -> np.ndarray | None:
        if self.kernel is None:
            return None
        cached_m, h = self._cache
        if cached_m is not m:
            h = stray_field(self.kernel, m)
            self._cache = (m, h)
        return h

    def __call__(self, m: np.ndarray, t: float) -> np.ndarray:
        return local_field(m, self.applied_at(t), self.stray(m), self.q, self.axis)
