"""Scenario harness: headless runs, replay validation, and the live server."""

from .scenario import Scenario, ScenarioError, load_scenario
from .runner import run_scenario, replay

__all__ = ["Scenario", "ScenarioError", "load_scenario", "run_scenario", "replay"]
