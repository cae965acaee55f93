"""Chance-constrained scheduling of a small heat-and-power system."""

from .scenario import Scenario, apply_mode, load_scenario
from .scheduler import Schedule, build_model, extract_schedule, schedule

__version__ = "0.1.0"
__all__ = ["Scenario", "Schedule", "apply_mode", "build_model", "extract_schedule",
           "load_scenario", "schedule"]
