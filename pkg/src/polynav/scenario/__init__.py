"""Scenario files, closed-loop runs, benchmarks and result export."""

from .config import (PlannerSpec, RobotSpec, ScenarioConfig, builtin_scenarios, load_scenario, parse_scenario,
                     resolve_scenario, validate)
from .export import export, read_trajectory, summary, write_benchmark, write_trajectory
from .runner import GOAL_REACHED, INFEASIBLE, TIMEOUT, RobotTrack, RunRecord, benchmark, run, sample_starts
from .shapes import SHAPES, builtin_shape

__all__ = [
    "GOAL_REACHED", "INFEASIBLE", "TIMEOUT", "SHAPES",
    "PlannerSpec", "RobotSpec", "RobotTrack", "RunRecord", "ScenarioConfig",
    "benchmark", "builtin_scenarios", "builtin_shape", "export", "load_scenario", "parse_scenario",
    "read_trajectory", "resolve_scenario", "run", "sample_starts", "summary", "validate",
    "write_benchmark", "write_trajectory",
]
