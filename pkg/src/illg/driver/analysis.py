"""Post-processing of recorded time series: spectra, steady state, loop metrics."""

from __future__ import annotations

import numpy as np
from scipy import signal


def spectrum(t, x) -> tuple[np.ndarray, np.ndarray]:
    """Linearly detrended periodogram of a uniformly sampled signal.

    Returns ``(frequency_Hz, power)``; ``t`` is in seconds.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.size < 4 or t.size != x.size:
        raise ValueError("need at least four samples with matching times")
    dt = np.diff(t)
    if np.ptp(dt) > 1e-6 * dt.mean():
        raise ValueError("samples must be uniformly spaced")
    return signal.periodogram(x, fs=1.0 / dt.mean(), detrend="linear", window="hann")


def peak_frequency(t, x, fmin: float = 0.0, fmax: float = np.inf) -> float:
    """Frequency of the largest periodogram bin inside ``[fmin, fmax]``."""
    f, p = spectrum(t, x)
    mask = (f >= fmin) & (f <= fmax) & (f > 0)
    if not mask.any():
        raise ValueError("no frequency bins in the requested band")
    return float(f[mask][np.argmax(p[mask])])


def band_power_fraction(t, x, band) -> float:
    """Share of the (non-DC) spectral power that falls in ``band = (lo, hi)`` Hz."""
    f, p = spectrum(t, x)
    total = p[f > 0].sum()
    if total == 0.0:
        return 0.0
    lo, hi = band
    return float(p[(f >= lo) & (f <= hi)].sum() / total)


def relative_change(new: float, old: float) -> float:
    """``|new - old| / |old|`` (absolute change when ``old`` is zero)."""
    scale = abs(old) if old != 0.0 else 1.0
    return abs(new - old) / scale


def crossing(fields, values) -> float | None:
    """Field at which ``values`` first changes sign, by linear interpolation."""
    fields = np.asarray(fields, dtype=float)
    values = np.asarray(values, dtype=float)
    for i in range(len(values) - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            return float(fields[i])
        if a * b < 0.0:
            return float(fields[i] + (fields[i + 1] - fields[i]) * a / (a - b))
    if len(values) and values[-1] == 0.0:
        return float(fields[-1])
    return None
