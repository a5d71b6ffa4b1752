"""Satellite payload routing testbed: multi-commodity flow LPs, a receding-
horizon controller, a priority-queue plant simulator, and a Monte-Carlo
comparison harness."""

from .domain import (
    ControlDecision,
    DemandTrajectory,
    PlantState,
    ScenarioConfig,
    lambda_schedule,
    validate_config,
)
from .controllers import PolicyKind, mpc, windowless_mpc

__all__ = [
    "ControlDecision",
    "DemandTrajectory",
    "PlantState",
    "PolicyKind",
    "ScenarioConfig",
    "lambda_schedule",
    "mpc",
    "validate_config",
    "windowless_mpc",
]

__version__ = "0.1.0"
