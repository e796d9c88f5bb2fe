"""Scenario files, figure sweeps, chart rendering and the command-line interface."""

from .config import Scenario, load_builtin, load_scenario, parse_scenario, serialize_scenario
from .sweeps import SweepResult, run_fig1_sweep, run_fig3_sweep, run_fig5_sweep, run_montecarlo_check
