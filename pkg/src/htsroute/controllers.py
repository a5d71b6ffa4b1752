"""Uniform policy layer over the five routing methods.

Offline policies (hindsight batch, static batch, cost-proportional) solve
one full-horizon LP on the realized flows and replay its decisions.  MPC
policies re-solve a lookahead window on expected flows at every step,
implementing only the first decision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import formulation
from .domain import ControlDecision, DemandTrajectory, PlantState, ScenarioConfig
from .lp_core import OPTIMAL, solve

OFFLINE_BUILDERS = {
    "batch_hindsight": formulation.build_batch,
    "static_batch": formulation.build_static_batch,
    "proportional": formulation.build_proportional,
}


@dataclass(frozen=True)
class PolicyKind:
    """One of: batch_hindsight, static_batch, proportional, mpc (with window)."""

    name: str
    window: int | None = None

    def __post_init__(self):
        if self.name == "mpc":
            if self.window is None or self.window < 1:
                raise ValueError("mpc requires window >= 1")
        elif self.name not in OFFLINE_BUILDERS:
            raise ValueError(f"unknown policy kind: {self.name}")

    @property
    def is_offline(self) -> bool:
        return self.name in OFFLINE_BUILDERS

    @property
    def label(self) -> str:
        return f"mpc_w{self.window}" if self.name == "mpc" else self.name


BATCH_HINDSIGHT = PolicyKind("batch_hindsight")
STATIC_BATCH = PolicyKind("static_batch")
PROPORTIONAL = PolicyKind("proportional")


def mpc(window: int) -> PolicyKind:
    return PolicyKind("mpc", window)


def windowless_mpc() -> PolicyKind:
    return mpc(1)


def parse_policy(label: str) -> PolicyKind:
    """Inverse of PolicyKind.label, plus the windowless_mpc alias."""
    if label == "windowless_mpc":
        return mpc(1)
    if label.startswith("mpc_w"):
        return mpc(int(label[len("mpc_w"):]))
    if label == "mpc":
        return PolicyKind("mpc", None)  # raises with a clear message
    return PolicyKind(label)


class SolverFailure(RuntimeError):
    """A policy LP did not come back optimal."""


def _solve_or_raise(lp, context: str):
    sol = solve(lp)
    if sol.status != OPTIMAL:
        raise SolverFailure(f"{context}: solver returned {sol.status}")
    return sol


def decide_offline(
    kind: PolicyKind, config: ScenarioConfig, flows: np.ndarray
) -> tuple[formulation.DecisionTrajectory, float]:
    """Solve the policy's full-horizon LP once; returns (trajectory, LP objective)."""
    if not kind.is_offline:
        raise ValueError(f"{kind.label} is not an offline policy")
    lp, vm = OFFLINE_BUILDERS[kind.name](config, flows)
    sol = _solve_or_raise(lp, kind.label)
    return formulation.extract_decisions(sol, vm), sol.objective_value


def decide_step_mpc(
    config: ScenarioConfig,
    state: PlantState,
    t: int,
    expected: np.ndarray,
    window: int,
) -> ControlDecision:
    """Solve the window LP from the observed state and return the step-t decision."""
    lp, vm = formulation.build_mpc_window(
        config, state, t, expected, prev_weights=state.last_weights, window=window
    )
    sol = _solve_or_raise(lp, f"mpc_w{window} step {t}")
    return formulation.extract_decisions(sol, vm, step=0)


class Policy:
    """Rollout-facing adapter: label plus a per-rollout decision callable."""

    def __init__(self, kind: PolicyKind):
        self.kind = kind
        self.label = kind.label

    def start(self, config: ScenarioConfig, demands: DemandTrajectory):
        if self.kind.is_offline:
            traj, _ = decide_offline(self.kind, config, demands.realized)
            return lambda state, t: traj.decisions[t - 1]
        window = self.kind.window

        def decide(state: PlantState, t: int) -> ControlDecision:
            return decide_step_mpc(config, state, t, demands.expected, window)

        return decide


class ReplayPolicy:
    """Replays an already-extracted decision trajectory (offline methods)."""

    def __init__(self, label: str, trajectory: formulation.DecisionTrajectory):
        self.label = label
        self.trajectory = trajectory

    def start(self, config: ScenarioConfig, demands: DemandTrajectory):
        return lambda state, t: self.trajectory.decisions[t - 1]


def make_policy(kind: PolicyKind) -> Policy:
    return Policy(kind)
