"""YAML scenario configuration.

SI units at the boundary: lengths in m, times in s, applied fields in T
(``mu0 * H``). Everything is validated up front and every problem is
reported at once. See ``README.md`` for the full schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from ..krylov import KrylovConfig
from ..physics import GAMMA_E, MU0, AppliedFieldSpec, MaterialParams

SCENARIOS = ("relax", "pulse", "hysteresis", "verify")


class ConfigError(ValueError):
    def __init__(self, problems, source=None):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        where = f"{source}: " if source else ""
        super().__init__(where + "; ".join(self.problems))


@dataclass(frozen=True)
class HysteresisConfig:
    axis: str = "long"
    canting_deg: float = 1.0
    field_min: float = -0.05  # T
    field_max: float = 0.05  # T
    n_field_steps: int = 101
    steady_rel_tol: float = 1e-7
    max_steps_per_field: int = 20000
    check_interval: int = 100

    def validate(self) -> list[str]:
        p = []
        if self.axis not in ("long", "short"):
            p.append(f"hysteresis.axis must be 'long' or 'short' (got {self.axis!r})")
        if not self.field_min < self.field_max:
            p.append("hysteresis.field_min must be < hysteresis.field_max")
        if self.n_field_steps < 2:
            p.append("hysteresis.n_field_steps must be >= 2")
        if not self.steady_rel_tol > 0:
            p.append("hysteresis.steady_rel_tol must be > 0")
        if self.max_steps_per_field < 1 or self.check_interval < 1:
            p.append("hysteresis.max_steps_per_field and check_interval must be >= 1")
        return p


@dataclass(frozen=True)
class VerifyConfig:
    suites: tuple[str, ...] = ("mms_1d", "mms_3d")
    params_1d: tuple[tuple[float, float], ...] = ((0.0, 0.0), (0.01, 0.0), (0.01, 100.0), (0.01, 1000.0))
    resolutions_1d: tuple[int, ...] = (20, 40, 80, 160)
    time_steps_3d: tuple[int, ...] = (20, 40, 80, 160)
    space_cells_3d: tuple[int, ...] = (6, 8, 10, 12)
    linear_solver: str = "direct"


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "output"
    cadence: int = 100
    snapshot_cadence: int = 0
    figures: bool = True


@dataclass(frozen=True)
class SimulationConfig:
    scenario: str
    material: MaterialParams
    box: tuple[float, float, float]
    cell: tuple[float, float, float]
    L: float
    easy_axis: str
    applied: AppliedFieldSpec
    dt_phys: float
    duration: float
    output: OutputConfig = OutputConfig()
    seed: int = 0
    stray_field_enabled: bool = True
    initial: dict = field(default_factory=lambda: {"state": "uniform", "direction": [1.0, 0.0, 0.0]})
    krylov: KrylovConfig = KrylovConfig()
    linear_solver: str = "gmres"
    initial_guess: str = "zero"
    steady_rel_tol: float = 1e-7
    steady_check_interval: int = 100
    stop_on_steady: bool = True
    hysteresis: HysteresisConfig = HysteresisConfig()
    verify: VerifyConfig = VerifyConfig()
    source: str | None = None

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(round(b / c)) for b, c in zip(self.box, self.cell))

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt_phys))

    def tesla_to_reduced(self, b) -> float:
        """Convert a flux density (T) to an applied field in units of Ms."""
        return b / (self.material.mu0 * self.material.Ms)


_KNOWN = {
    "scenario", "material", "geometry", "applied", "time", "output", "seed",
    "stray_field", "initial", "krylov", "linear_solver", "initial_guess",
    "steady", "hysteresis", "verify",
}


def _vec3(value, name, problems):
    try:
        v = tuple(float(x) for x in value)
    except (TypeError, ValueError):
        problems.append(f"{name} must be a list of three numbers (got {value!r})")
        return (0.0, 0.0, 0.0)
    if len(v) != 3:
        problems.append(f"{name} must have three components (got {len(v)})")
        return (0.0, 0.0, 0.0)
    return v


def _num(section, key, name, problems, default=None, required=False):
    if key not in section:
        if required:
            problems.append(f"missing required field {name}")
        return default
    try:
        return float(section[key])
    except (TypeError, ValueError):
        problems.append(f"{name} must be a number (got {section[key]!r})")
        return default


def parse_config(data: dict, source=None) -> SimulationConfig:
    """Validate a parsed mapping and build a :class:`SimulationConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", source)
    problems: list[str] = []
    for key in data:
        if key not in _KNOWN:
            problems.append(f"unknown section {key!r}")

    scenario = data.get("scenario")
    if scenario not in SCENARIOS:
        problems.append(f"scenario must be one of {SCENARIOS} (got {scenario!r})")

    mat = data.get("material") or {}
    Ms = _num(mat, "Ms", "material.Ms", problems, required=True)
    A = _num(mat, "A", "material.A", problems, required=scenario != "verify", default=0.0)
    Ku = _num(mat, "Ku", "material.Ku", problems, default=0.0)
    alpha = _num(mat, "alpha", "material.alpha", problems, required=scenario != "verify", default=0.0)
    tau = _num(mat, "tau", "material.tau", problems, default=0.0)
    gamma = _num(mat, "gamma", "material.gamma", problems, default=GAMMA_E)
    mu0 = _num(mat, "mu0", "material.mu0", problems, default=MU0)
    material = None
    if Ms is not None:
        try:
            material = MaterialParams(Ms, A, Ku, alpha, tau, gamma, mu0)
        except ValueError as exc:
            problems.append(str(exc))

    geo = data.get("geometry") or {}
    box = _vec3(geo.get("box", [1.0, 1.0, 1.0]), "geometry.box", problems)
    cell = _vec3(geo.get("cell", box), "geometry.cell", problems)
    if "box" not in geo and scenario != "verify":
        problems.append("missing required field geometry.box")
    if min(box) <= 0 or min(cell) <= 0:
        problems.append("geometry.box and geometry.cell must be positive")
    else:
        for axis, b, c in zip("xyz", box, cell):
            n = b / c
            if abs(n - round(n)) > 1e-9 * n or round(n) < 1:
                problems.append(f"cell size {c} does not divide box edge {b} along {axis}")
    L = float(geo.get("L", max(box)))
    if not L > 0:
        problems.append("geometry.L must be > 0")
    easy_axis = geo.get("easy_axis", "x")
    if easy_axis not in ("x", "y", "z"):
        problems.append(f"geometry.easy_axis must be x, y or z (got {easy_axis!r})")

    tm = data.get("time") or {}
    dt = _num(tm, "dt", "time.dt", problems, required=scenario != "verify", default=1.0)
    duration = _num(tm, "duration", "time.duration", problems, default=dt)
    if dt is not None and not dt > 0:
        problems.append(f"time.dt must be > 0 (got {dt})")
    elif duration is not None and duration < dt * (1 - 1e-12):
        problems.append("time.duration must be >= time.dt")

    app = data.get("applied") or {}
    applied = AppliedFieldSpec()
    try:
        const_T = _vec3(app.get("constant_T", [0.0, 0.0, 0.0]), "applied.constant_T", problems)
        pulse = app.get("pulse") or {}
        if material is not None:
            scale = 1.0 / (material.mu0 * material.Ms)
            applied = AppliedFieldSpec(
                constant=tuple(scale * c for c in const_T),
                pulse_amplitude=float(pulse.get("amplitude", 0.0)),
                pulse_frequency=float(pulse.get("frequency", 0.0)),
                pulse_direction=_vec3(pulse.get("direction", [0.0, 1.0, 0.0]), "applied.pulse.direction", problems),
                pulse_window=tuple(float(x) for x in pulse.get("window", [0.0, 0.0])),
            )
    except (TypeError, ValueError) as exc:
        problems.append(f"applied: {exc}")

    out = data.get("output") or {}
    output = OutputConfig(
        directory=str(out.get("dir", "output")),
        cadence=int(out.get("cadence", 100)),
        snapshot_cadence=int(out.get("snapshot_cadence", 0)),
        figures=bool(out.get("figures", True)),
    )
    if output.cadence < 1:
        problems.append("output.cadence must be >= 1")
    if output.snapshot_cadence < 0:
        problems.append("output.snapshot_cadence must be >= 0")

    kr = data.get("krylov") or {}
    krylov = KrylovConfig()
    try:
        krylov = KrylovConfig(
            tol=float(kr.get("tol", 1e-11)),
            restart=int(kr.get("restart", 30)),
            max_iters=int(kr.get("max_iters", 500)),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"krylov: {exc}")

    linear_solver = data.get("linear_solver", "gmres")
    if linear_solver not in ("gmres", "direct"):
        problems.append(f"linear_solver must be 'gmres' or 'direct' (got {linear_solver!r})")
    initial_guess = data.get("initial_guess", "zero")
    if initial_guess not in ("zero", "previous"):
        problems.append(f"initial_guess must be 'zero' or 'previous' (got {initial_guess!r})")

    initial = dict(data.get("initial") or {"state": "uniform", "direction": [1.0, 0.0, 0.0]})
    if initial.get("state", "uniform") not in ("uniform", "random", "snapshot"):
        problems.append(f"initial.state must be uniform, random or snapshot (got {initial.get('state')!r})")
    if initial.get("state") == "snapshot" and "path" not in initial:
        problems.append("initial.path is required for a snapshot initial state")

    steady = data.get("steady") or {}
    hy = data.get("hysteresis") or {}
    hcfg = HysteresisConfig()
    try:
        hcfg = HysteresisConfig(
            axis=hy.get("axis", "long"),
            canting_deg=float(hy.get("canting_deg", 1.0)),
            field_min=float(hy.get("field_min_T", -0.05)),
            field_max=float(hy.get("field_max_T", 0.05)),
            n_field_steps=int(hy.get("n_field_steps", 101)),
            steady_rel_tol=float(hy.get("steady_rel_tol", steady.get("rel_tol", 1e-7))),
            max_steps_per_field=int(hy.get("max_steps_per_field", 20000)),
            check_interval=int(hy.get("check_interval", steady.get("check_interval", 100))),
        )
        if scenario == "hysteresis":
            problems.extend(hcfg.validate())
    except (TypeError, ValueError) as exc:
        problems.append(f"hysteresis: {exc}")

    vy = data.get("verify") or {}
    vcfg = VerifyConfig()
    try:
        kw = {}
        if "suites" in vy:
            kw["suites"] = tuple(vy["suites"])
        if "params_1d" in vy:
            kw["params_1d"] = tuple((float(a), float(e)) for a, e in vy["params_1d"])
        for key in ("resolutions_1d", "time_steps_3d", "space_cells_3d"):
            if key in vy:
                kw[key] = tuple(int(n) for n in vy[key])
        if "linear_solver" in vy:
            kw["linear_solver"] = vy["linear_solver"]
        vcfg = VerifyConfig(**kw)
        if scenario == "verify":
            for s in vcfg.suites:
                if s not in ("mms_1d", "mms_3d"):
                    problems.append(f"verify.suites entries must be mms_1d or mms_3d (got {s!r})")
            for key in ("resolutions_1d", "time_steps_3d", "space_cells_3d"):
                if len(getattr(vcfg, key)) < 2:
                    problems.append(f"verify.{key} needs at least two resolutions to fit an order")
    except (TypeError, ValueError) as exc:
        problems.append(f"verify: {exc}")

    if problems:
        raise ConfigError(problems, source)

    return SimulationConfig(
        scenario=scenario,
        material=material,
        box=box,
        cell=cell,
        L=L,
        easy_axis=easy_axis,
        applied=applied,
        dt_phys=dt,
        duration=duration,
        output=output,
        seed=int(data.get("seed", 0)),
        stray_field_enabled=bool(data.get("stray_field", True)),
        initial=initial,
        krylov=krylov,
        linear_solver=linear_solver,
        initial_guess=initial_guess,
        steady_rel_tol=float(steady.get("rel_tol", 1e-7)),
        steady_check_interval=int(steady.get("check_interval", 100)),
        stop_on_steady=bool(steady.get("stop", True)),
        hysteresis=hcfg,
        verify=vcfg,
        source=str(source) if source else None,
    )


def load_config(path, scenario: str | None = None) -> SimulationConfig:
    """Read and validate a YAML config; ``scenario`` overrides the file's value."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"parse error: {where}{getattr(exc, 'problem', exc)}", path) from exc
    if scenario is not None and isinstance(data, dict):
        data["scenario"] = scenario
    return parse_config(data, path)


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``"pulse"``."""
    ref = resources.files("illg") / "configs" / f"{name}.yaml"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled config {name!r}")
    return Path(str(ref))


def bundled_configs() -> list[str]:
    root = resources.files("illg") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))
