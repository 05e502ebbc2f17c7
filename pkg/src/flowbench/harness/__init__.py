"""Experiment orchestration: scenarios, studies, ablation suites, CLI."""

from .scenarios import Scenario, builtin_scenarios, get_scenario, scenario_from_dict
from .studies import StudySpec, ablation_suite, run_study, sign_test

__all__ = [
    "Scenario",
    "StudySpec",
    "ablation_suite",
    "builtin_scenarios",
    "get_scenario",
    "run_study",
    "scenario_from_dict",
    "sign_test",
]
