"""Scenario configs, built-ins and the ``difflab`` command."""
from .config import Check, Equation, InitialKind, RunSummary, Scenario, ScenarioError, dumps, load, parse_text
from .runner import run_scenario

__all__ = [
    "Check", "Equation", "InitialKind", "RunSummary", "Scenario", "ScenarioError",
    "dumps", "load", "parse_text", "run_scenario",
]
