"""Configuration, scenario runs, bandwidth sweeps, plots and the command line."""

from .config import ConfigError, DEFAULTS, load_config, resolve, validate, worker_count
from .plots import PLOT_KINDS, emit_plot
from .scenario import ScenarioResult, SolverReport, comb_from_config, run_scenario, span_from_config
from .sweep import BenchResult, leading_subcomb, run_bandwidth_sweep, sweep_points

__all__ = [
    "BenchResult",
    "ConfigError",
    "DEFAULTS",
    "PLOT_KINDS",
    "ScenarioResult",
    "SolverReport",
    "comb_from_config",
    "emit_plot",
    "leading_subcomb",
    "load_config",
    "resolve",
    "run_bandwidth_sweep",
    "run_scenario",
    "span_from_config",
    "sweep_points",
    "validate",
    "worker_count",
]
