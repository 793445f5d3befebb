"""Ergonomics-driven virtual fixtures for a mobile manipulator guided by hand."""

from .ergonomics import compute_joint_angles, compute_score
from .fixture import FixtureController
from .params import FixtureParams, arm_profile, base_profile
from .scenario import builtin_scenario, load_scenario
from .sim import run_scenario
from .trace import compute_metrics, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "FixtureController", "FixtureParams", "arm_profile", "base_profile",
    "compute_joint_angles", "compute_score", "builtin_scenario", "load_scenario",
    "run_scenario", "compute_metrics", "read_trace", "write_trace",
]
