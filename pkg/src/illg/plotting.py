"""Static figures written next to the CSV outputs (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_timeseries(rows, path) -> Path:
    """Average magnetization and energies against time (ps)."""
    data = np.asarray(rows, dtype=float)
    t_ps = data[:, 1] * 1e12
    fig, (ax_m, ax_e) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for col, name in zip((2, 3, 4), ("<mx>", "<my>", "<mz>")):
        ax_m.plot(t_ps, data[:, col], label=name)
    ax_m.set_ylabel("average magnetization")
    ax_m.legend(loc="best")
    ax_e.plot(t_ps, data[:, 5], label="F (LL energy)")
    ax_e.plot(t_ps, data[:, 6], "--", label="J (total energy)")
    ax_e.set_xlabel("t (ps)")
    ax_e.set_ylabel("energy (J)")
    ax_e.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_hysteresis(loop, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, style in (("descending", "-o"), ("ascending", "-s")):
        pts = loop.branch(name)
        h = [p.field_T * 1e3 for p in pts]
        for c, label in enumerate(("mx", "my")):
            ax.plot(h, [p.m_avg[c] for p in pts], style, ms=2, label=f"{label} {name}")
    ax.axhline(0.0, color="0.6", lw=0.5)
    ax.axvline(0.0, color="0.6", lw=0.5)
    ax.set_xlabel("applied field (mT)")
    ax.set_ylabel("average magnetization")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_convergence(tables, path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, kind in zip(axes, ("time", "space")):
        for tab in tables:
            if tab.kind != kind:
                continue
            ax.loglog(tab.step_sizes, tab.errors, "-o", ms=3, label=f"{tab.label} ({tab.order:.2f})")
        ax.set_xlabel("dt" if kind == "time" else "dx")
        ax.set_ylabel("L-infinity error")
        ax.set_title(f"{kind} convergence")
        ax.legend(loc="best", fontsize="x-small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render(result, outdir) -> dict[str, Path]:
    """Figures for whatever a :class:`ScenarioResult` contains."""
    outdir = Path(outdir)
    out = {}
    if result.run is not None and result.run.rows:
        out["timeseries_png"] = plot_timeseries(result.run.rows, outdir / "timeseries.png")
    if result.loop is not None:
        out["hysteresis_png"] = plot_hysteresis(result.loop, outdir / "hysteresis.png")
    if result.tables:
        out["convergence_png"] = plot_convergence(result.tables, outdir / "convergence.png")
    return out
