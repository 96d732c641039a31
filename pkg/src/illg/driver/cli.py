"""``simulate`` command line entry point.

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..krylov import ConvergenceError
from ..stepper import SolverFailure
from .config import SCENARIOS, ConfigError, bundled_config, bundled_configs, load_config
from .scenarios import run_scenario

log = logging.getLogger("illg")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="simulate",
        description="Inertial LLG micromagnetics: relaxation, pulse, hysteresis and verification runs.",
    )
    p.add_argument("config", help="YAML config path, or the name of a bundled config (see --list)")
    p.add_argument("--scenario", choices=SCENARIOS, help="override the scenario named in the config")
    p.add_argument("--output", "-o", help="output directory (default: output.dir from the config)")
    p.add_argument("--audit", action="store_true", help="check unit norm and the dot-product identity on every step")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.add_argument("--list", action="store_true", help="list bundled configs and exit")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _resolve(name: str) -> Path:
    path = Path(name)
    if path.exists() or path.suffix:
        return path
    try:
        return bundled_config(name)
    except FileNotFoundError:
        return path


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    if "--list" in argv:
        print("\n".join(bundled_configs()))
        return 0
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved for solver failures here
        return 1 if exc.code else 0
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(_resolve(args.config), scenario=args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    outdir = Path(args.output or cfg.output.directory)
    if args.no_figures:
        cfg = replace(cfg, output=replace(cfg.output, figures=False))
    try:
        result = run_scenario(cfg, outdir, audit=args.audit)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SolverFailure, ConvergenceError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    if cfg.output.figures:
        from ..plotting import render

        result.outputs.update(render(result, outdir))
    for name, path in sorted(result.outputs.items()):
        print(f"{name}: {path}")
    if result.run is not None and result.run.audit:
        print(f"audit: max unit deviation {result.run.max_unit_deviation:.3e}, "
              f"max dot-identity error {result.run.max_dot_identity_error:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
