"""Time-varying AC power flow with closed-form voltage trajectories."""

from .case import Case, load_case, parse_case
from .derivatives import SlopeVector, derivative_series, first_derivative
from .interval import LinearTimeInterval, combined_tv, linear_tv
from .norms import norm_report
from .powerflow import InjectionTarget, Network, SolverOptions, VoltageState, solve_powerflow
from .trajectory import InjectionSchedule, generate_scenario, partition, run_time_varying, validate

__all__ = [
    "Case",
    "InjectionSchedule",
    "InjectionTarget",
    "LinearTimeInterval",
    "Network",
    "SlopeVector",
    "SolverOptions",
    "VoltageState",
    "combined_tv",
    "derivative_series",
    "first_derivative",
    "generate_scenario",
    "linear_tv",
    "load_case",
    "norm_report",
    "parse_case",
    "partition",
    "run_time_varying",
    "solve_powerflow",
    "validate",
]
