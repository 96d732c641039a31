"""Scenario orchestration: relaxation, pulse, hysteresis and verification runs."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..demag import build_demag_kernel
from ..energy import EnergyReport, ll_energy, total_energy
from ..grid import Grid, spatial_average, unit_deviation
from ..physics import AppliedFieldSpec, DimensionlessParams, FieldModel, canted_field, nondimensionalize
from ..stepper import SolverState, StepperConfig, initialize, step
from ..verify import ConvergenceTable, ManufacturedCase, spatial_sweep, temporal_sweep, write_convergence_csv
from . import io
from .analysis import crossing, relative_change
from .config import ConfigError, SimulationConfig

log = logging.getLogger(__name__)


@dataclass
class Problem:
    """A configuration turned into grid, scaled parameters and field model."""

    config: SimulationConfig
    grid: Grid
    dimless: DimensionlessParams
    dt: float
    stepper: StepperConfig
    fields: FieldModel
    energy_scale: float  # joules per dimensionless energy unit

    @property
    def t_unit(self) -> float:
        return self.dimless.t_unit

    def energies(self, state: SolverState) -> EnergyReport:
        m = state.m_curr
        d = self.dimless
        rep = ll_energy(
            self.grid,
            m,
            d.epsilon,
            d.q,
            h_applied=self.fields.applied_at(state.time),
            h_stray=self.fields.stray(m),
            axis=self.fields.axis,
            scale=self.energy_scale,
        )
        return total_energy(rep, self.grid, m, state.m_prev, self.dt, self.stepper.alpha, d.eta)


def build_problem(cfg: SimulationConfig) -> Problem:
    mat = cfg.material
    dimless, dt = nondimensionalize(mat, cfg.L, cfg.dt_phys)
    nx, ny, nz = cfg.shape
    grid = Grid(nx, ny, nz, *(c / cfg.L for c in cfg.cell), L=cfg.L)
    kernel = build_demag_kernel(grid, cfg.cell) if cfg.stray_field_enabled else None
    fields = FieldModel(dimless.q, cfg.easy_axis, cfg.applied, dimless.t_unit, kernel)
    stepper = StepperConfig(
        epsilon=dimless.epsilon,
        alpha=mat.alpha,
        eta=dimless.eta,
        dt=dt,
        krylov=cfg.krylov,
        linear_solver=cfg.linear_solver,
        initial_guess=cfg.initial_guess,
    )
    return Problem(cfg, grid, dimless, dt, stepper, fields, mat.mu0 * mat.Ms ** 2 * cfg.L ** 3)


def initial_magnetization(cfg: SimulationConfig, grid: Grid) -> np.ndarray:
    init = cfg.initial
    kind = init.get("state", "uniform")
    if kind == "uniform":
        d = np.asarray(init.get("direction", [1.0, 0.0, 0.0]), dtype=float)
        if d.shape != (3,) or not np.linalg.norm(d) > 0:
            raise ConfigError(f"initial.direction must be a non-zero 3-vector (got {init.get('direction')!r})")
        return grid.uniform(d / np.linalg.norm(d))
    if kind == "random":
        rng = np.random.default_rng(cfg.seed)
        m = rng.normal(size=grid.shape + (3,))
        return m / np.linalg.norm(m, axis=-1, keepdims=True)
    try:
        snap = io.read_snapshot(init["path"])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load initial snapshot: {exc}") from exc
    if snap.grid.shape != grid.shape:
        raise ConfigError(f"snapshot grid {snap.grid.shape} does not match configured grid {grid.shape}")
    return snap.m / np.linalg.norm(snap.m, axis=-1, keepdims=True)


@dataclass
class RunResult:
    """Outcome of one integration segment."""

    state: SolverState
    rows: list = field(default_factory=list)
    steady: bool = False
    steps_taken: int = 0
    gmres_iterations: int = 0
    audit: list = field(default_factory=list)
    last_energy: EnergyReport | None = None

    @property
    def max_unit_deviation(self) -> float:
        return max((a[1] for a in self.audit), default=0.0)

    @property
    def max_dot_identity_error(self) -> float:
        return max((a[2] for a in self.audit), default=0.0)


class Recorder:
    """Collects time-series rows (and optionally streams them to CSV and snapshots)."""

    def __init__(self, problem: Problem, writer: io.TimeSeriesWriter | None = None,
                 snapshot_dir: Path | None = None, snapshot_cadence: int = 0):
        self.problem = problem
        self.writer = writer
        self.snapshot_dir = snapshot_dir
        self.snapshot_cadence = snapshot_cadence
        self.rows: list[tuple] = []
        self.last_step = None

    def record(self, state: SolverState, iters: int, energy: EnergyReport | None = None) -> EnergyReport:
        p = self.problem
        energy = energy or p.energies(state)
        row = (state.step, state.time * p.t_unit, *spatial_average(state.m_curr), energy.F_joules, energy.J_joules, iters)
        self.rows.append(row)
        self.last_step = state.step
        if self.writer is not None:
            self.writer.write(*row[:2], row[2:5], *row[5:])
        return energy

    def snapshot(self, state: SolverState, force: bool = False) -> None:
        if self.snapshot_dir is None:
            return
        every = self.snapshot_cadence
        if force or (every > 0 and state.step % every == 0):
            path = self.snapshot_dir / f"snapshot_{state.step}.txt"
            io.write_snapshot(self.problem.grid, state.m_curr, state.time * self.problem.t_unit, path, scale=self.problem.grid.L)


def integrate(
    problem: Problem,
    state: SolverState,
    n_steps: int,
    recorder: Recorder | None = None,
    cadence: int = 100,
    audit: bool = False,
    steady_tol: float | None = None,
    check_interval: int = 100,
) -> RunResult:
    """Take up to ``n_steps`` steps, optionally stopping at steady state.

    Steady state means the relative LL-energy change between two checks
    ``check_interval`` steps apart is below ``steady_tol``.
    """
    result = RunResult(state)
    F_last = problem.energies(state).F if steady_tol is not None else None
    iters = 0
    for k in range(1, n_steps + 1):
        state = step(state, problem.fields, problem.stepper, audit=audit)
        iters = state.report.iterations
        result.gmres_iterations += iters
        if audit:
            result.audit.append((state.step, unit_deviation(state.m_curr), state.dot_identity_error, iters))
        energy = None
        if recorder is not None and state.step % cadence == 0:
            energy = recorder.record(state, iters)
            recorder.snapshot(state)
        if steady_tol is not None and k % check_interval == 0:
            energy = energy or problem.energies(state)
            F = energy.F
            if relative_change(F, F_last) < steady_tol:
                result.steady = True
                result.steps_taken = k
                result.state = state
                result.last_energy = energy
                break
            F_last = F
    else:
        result.steps_taken = n_steps
    result.state = state
    if recorder is not None and recorder.last_step != state.step:
        result.last_energy = recorder.record(state, iters)
    return result


# -- scenarios ---------------------------------------------------------------

@dataclass
class ScenarioResult:
    scenario: str
    outputs: dict[str, Path] = field(default_factory=dict)
    run: RunResult | None = None
    loop: "LoopResult | None" = None
    tables: list[ConvergenceTable] = field(default_factory=list)


def _start(problem: Problem) -> SolverState:
    m0 = initial_magnetization(problem.config, problem.grid)
    return initialize(problem.grid, m0, problem.dt)


def _timeseries_run(cfg: SimulationConfig, outdir: Path, audit: bool, stop_on_steady: bool) -> ScenarioResult:
    problem = build_problem(cfg)
    state = _start(problem)
    out = ScenarioResult(cfg.scenario)
    ts_path = outdir / "timeseries.csv"
    with io.TimeSeriesWriter(ts_path) as writer:
        rec = Recorder(problem, writer, outdir, cfg.output.snapshot_cadence)
        # step 0 is the initial state with zero velocity
        start = replace(state, step=0, m_curr=state.m_prev)
        rec.record(start, 0)
        rec.snapshot(start, force=True)
        run = integrate(
            problem,
            state,
            max(cfg.n_steps - state.step, 0),
            rec,
            cadence=cfg.output.cadence,
            audit=audit,
            steady_tol=cfg.steady_rel_tol if stop_on_steady else None,
            check_interval=cfg.steady_check_interval,
        )
        rec.snapshot(run.state, force=True)
    run.rows = rec.rows
    out.run = run
    out.outputs["timeseries"] = ts_path
    if audit:
        out.outputs["audit"] = io.write_audit(run.audit, outdir / "audit.csv")
    log.info(
        "%s: %d steps, steady=%s, GMRES iterations %d",
        cfg.scenario, run.state.step, run.steady, run.gmres_iterations,
    )
    return out


def run_relaxation(cfg: SimulationConfig, outdir, audit: bool = False) -> ScenarioResult:
    """Relax until ``duration`` or until the LL energy stops changing."""
    return _timeseries_run(cfg, Path(outdir), audit, cfg.stop_on_steady)


def run_pulse(cfg: SimulationConfig, outdir, audit: bool = False) -> ScenarioResult:
    """Integrate through and past the pulse window for the full duration."""
    return _timeseries_run(cfg, Path(outdir), audit, stop_on_steady=False)


@dataclass(frozen=True)
class LoopPoint:
    branch: str
    field_T: float
    m_avg: tuple[float, float, float]
    steps_to_steady: int
    converged: bool


@dataclass
class LoopResult:
    points: list[LoopPoint]
    axis: str

    def branch(self, name: str) -> list[LoopPoint]:
        return [p for p in self.points if p.branch == name]

    @property
    def component(self) -> int:
        return 0 if self.axis == "long" else 1

    def coercive_fields(self) -> tuple[float | None, float | None]:
        """Fields (T) where the loop-axis component changes sign on each branch."""
        out = []
        for name in ("descending", "ascending"):
            pts = self.branch(name)
            out.append(crossing([p.field_T for p in pts], [p.m_avg[self.component] for p in pts]))
        return tuple(out)

    @property
    def coercive_field(self) -> float:
        vals = [abs(h) for h in self.coercive_fields() if h is not None]
        return float(np.mean(vals)) if vals else float("nan")

    def remanence(self, branch: str = "descending") -> np.ndarray:
        """``<m>`` at the zero-field point of ``branch``."""
        pts = self.branch(branch)
        for p in pts:
            if p.field_T == 0.0:
                return np.array(p.m_avg)
        h = np.array([p.field_T for p in pts])
        m = np.array([p.m_avg for p in pts])
        order = np.argsort(h)
        return np.array([np.interp(0.0, h[order], m[order, c]) for c in range(3)])

    def closure_error(self) -> float:
        first, last = self.points[0], self.points[-1]
        return float(np.max(np.abs(np.subtract(first.m_avg, last.m_avg))))


def load_loop(path, axis: str) -> LoopResult:
    """Read a ``hysteresis.csv`` written by :func:`run_hysteresis`."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    points = [
        LoopPoint(
            r["branch"],
            float(r["field_T"]),
            (float(r["mx"]), float(r["my"]), float(r["mz"])),
            int(r["steps_to_steady"]),
            bool(int(r["converged"])),
        )
        for r in rows
    ]
    return LoopResult(points, axis)


def sweep_fields(hcfg) -> tuple[np.ndarray, np.ndarray]:
    """Descending and ascending field values (T); the turning point is not repeated."""
    n = hcfg.n_field_steps
    span = hcfg.field_max - hcfg.field_min
    up = hcfg.field_min + span * np.arange(n) / (n - 1)
    up[np.abs(up) < 1e-12 * span] = 0.0
    return up[::-1].copy(), up[1:].copy()


def run_hysteresis(cfg: SimulationConfig, outdir, audit: bool = False) -> ScenarioResult:
    """Sweep the canted field from max to min and back, relaxing at each value."""
    outdir = Path(outdir)
    hcfg = cfg.hysteresis
    problem = build_problem(cfg)
    to_reduced = cfg.tesla_to_reduced
    down, up = sweep_fields(hcfg)
    h0 = canted_field(1.0, hcfg.axis, hcfg.canting_deg)
    state = initialize(problem.grid, problem.grid.uniform(h0), problem.dt)
    points: list[LoopPoint] = []
    audit_rows = []
    for branch, values in (("descending", down), ("ascending", up)):
        for b in values:
            h = canted_field(to_reduced(b), hcfg.axis, hcfg.canting_deg)
            problem.fields.applied = AppliedFieldSpec(constant=tuple(h))
            run = integrate(
                problem, state, hcfg.max_steps_per_field, audit=audit,
                steady_tol=hcfg.steady_rel_tol, check_interval=hcfg.check_interval,
            )
            state = run.state
            audit_rows.extend(run.audit)
            if not run.steady:
                log.warning("field %.4g T: no steady state after %d steps", b, hcfg.max_steps_per_field)
            m_avg = tuple(float(c) for c in spatial_average(state.m_curr))
            points.append(LoopPoint(branch, float(b), m_avg, run.steps_taken, run.steady))
            log.info("%s %+.4f T  <m> = (%.4f, %.4f, %.4f)  steps %d", branch, b, *m_avg, run.steps_taken)
    loop = LoopResult(points, hcfg.axis)
    out = ScenarioResult("hysteresis", loop=loop)
    out.outputs["hysteresis"] = io.write_hysteresis(points, outdir / "hysteresis.csv")
    io.write_snapshot(problem.grid, state.m_curr, state.time * problem.t_unit,
                      outdir / f"snapshot_{state.step}.txt", scale=problem.grid.L)
    if audit:
        out.outputs["audit"] = io.write_audit(audit_rows, outdir / "audit.csv")
    hc = loop.coercive_fields()
    log.info("coercive fields (T): %s; remanence %s", hc, loop.remanence())
    return out


def run_verification(cfg: SimulationConfig, outdir, audit: bool = False) -> ScenarioResult:
    """Manufactured-solution sweeps in 1D (four parameter sets) and 3D."""
    outdir = Path(outdir)
    v = cfg.verify
    tables = []
    kw = {"linear_solver": v.linear_solver, "krylov": cfg.krylov}
    if "mms_1d" in v.suites:
        for alpha, eta in v.params_1d:
            case = ManufacturedCase(1, alpha, eta, final_time=0.5)
            label = f"1d alpha={alpha:g} eta={eta:g}"
            tables.append(spatial_sweep(case, v.resolutions_1d, 100, 1.0, label, **kw))
            tables.append(temporal_sweep(case, v.resolutions_1d, 1000, 1.0, label, **kw))
    if "mms_3d" in v.suites:
        tables.append(temporal_sweep(ManufacturedCase(3, 0.01, 1000.0, 0.5), v.time_steps_3d, 10, 0.01, "3d", **kw))
        tables.append(spatial_sweep(ManufacturedCase(3, 0.01, 1000.0, 0.1), v.space_cells_3d, 100, 1.0, "3d", **kw))
    for t in tables:
        log.info("%s %s order %.3f", t.label, t.kind, t.order)
    out = ScenarioResult("verify", tables=tables)
    out.outputs["convergence"] = write_convergence_csv(tables, outdir / "convergence.csv")
    return out


RUNNERS = {
    "relax": run_relaxation,
    "pulse": run_pulse,
    "hysteresis": run_hysteresis,
    "verify": run_verification,
}


def run_scenario(cfg: SimulationConfig, outdir, audit: bool = False) -> ScenarioResult:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg.scenario](cfg, outdir, audit)


# -- single-step iteration study ---------------------------------------------

def first_step_iterations(cfg: SimulationConfig) -> int:
    """GMRES iterations of the first step from ``m^0 = m^1``."""
    problem = build_problem(cfg)
    state = step(_start(problem), problem.fields, problem.stepper)
    return state.report.iterations


def iteration_grid(cfg: SimulationConfig, taus, alphas) -> dict[tuple[float, float], int]:
    """First-step iteration counts over a grid of ``(tau, alpha)`` values."""
    out = {}
    for tau in taus:
        for alpha in alphas:
            c = replace(cfg, material=replace(cfg.material, tau=tau, alpha=alpha))
            out[(tau, alpha)] = first_step_iterations(c)
    return out
