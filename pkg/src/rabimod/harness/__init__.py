"""Experiment harness: presets, configuration, CLI, convergence checks."""

from .config import RunSettings, load_config_file, resolve_settings
from .experiments import (
    PRESETS,
    ConvergenceReport,
    TableResult,
    convergence_report,
    run_scenario,
)

__all__ = [
    "RunSettings",
    "load_config_file",
    "resolve_settings",
    "PRESETS",
    "ConvergenceReport",
    "TableResult",
    "convergence_report",
    "run_scenario",
]
