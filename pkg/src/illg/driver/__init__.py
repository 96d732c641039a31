"""Configuration loading, scenario runs, output files and the ``simulate`` CLI."""

from .config import ConfigError, SimulationConfig, load_config
from .scenarios import run_scenario

__all__ = ["ConfigError", "SimulationConfig", "load_config", "run_scenario"]
