"""Ground-truth simulator.

Applies implemented decisions to *realized* arrivals: proportional inflow
split, greedy service up to the weight cap, then cost-greedy overflow drops
against the shared per-module buffer.  This is the only place costs are
actually incurred; LPs only plan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import ControlDecision, DemandTrajectory, PlantState, ScenarioConfig, initial_state


@dataclass(frozen=True)
class StepOutcome:
    inflows: np.ndarray      # (M, P)
    outflows: np.ndarray
    losses: np.ndarray
    step_cost: float


@dataclass(frozen=True)
class RunTrajectory:
    method: str
    run_index: int
    outcomes: list[StepOutcome]
    states: list[PlantState]         # state after each step
    flush_losses: np.ndarray         # (M, P) end-of-horizon stranded packets
    cumulative_cost: float

    def losses_by_step(self) -> np.ndarray:
        """(T, P) realized losses summed over modules, flush folded into the last step."""
        out = np.array([o.losses.sum(axis=0) for o in self.outcomes])
        out[-1] += self.flush_losses.sum(axis=0)
        return out

    def outflows_by_step(self) -> np.ndarray:
        return np.array([o.outflows.sum(axis=0) for o in self.outcomes])

    def queues_by_step(self) -> np.ndarray:
        return np.array([s.queues.sum(axis=0) for s in self.states])


def split_inflow(planned: np.ndarray, realized_totals: np.ndarray) -> np.ndarray:
    """Scale the planned per-module split to the realized per-priority totals.

    A priority whose plan is all-zero falls back to a uniform split.
    """
    M = planned.shape[0]
    col_sums = planned.sum(axis=0)
    out = np.empty_like(planned, dtype=float)
    for p in range(planned.shape[1]):
        if col_sums[p] > 1e-12:
            out[:, p] = realized_totals[p] * planned[:, p] / col_sums[p]
        else:
            out[:, p] = realized_totals[p] / M
    return out


def step(
    state: PlantState,
    decision: ControlDecision,
    realized: np.ndarray,
    config: ScenarioConfig,
) -> tuple[PlantState, StepOutcome]:
    """One plant step: arrivals, greedy service, then capacity drops."""
    inflow = split_inflow(decision.inflow_plan, realized)
    service_cap = np.minimum(decision.weights / config.scheduler_period, config.link_capacity)
    out = np.minimum(service_cap, state.queues + inflow)
    occ = state.queues + inflow - out
    occ = np.maximum(occ, 0.0)  # guard fp dust

    losses = np.zeros_like(occ)
    k = np.asarray(config.loss_costs)
    # drop order: cheapest cost first, ties broken toward the larger priority index
    drop_order = sorted(range(len(k)), key=lambda p: (k[p], -p))
    for m in range(occ.shape[0]):
        excess = occ[m].sum() - config.queue_capacity
        for p in drop_order:
            if excess <= 1e-12:
                break
            d = min(excess, occ[m, p])
            occ[m, p] -= d
            losses[m, p] += d
            excess -= d

    cost = float((losses * k).sum())
    new_state = PlantState(queues=occ, last_weights=decision.weights)
    return new_state, StepOutcome(inflow, out, losses, cost)


def rollout(
    config: ScenarioConfig, policy, demands: DemandTrajectory, run_index: int = -1
) -> RunTrajectory:
    """Run one policy over one demand realization for the full horizon.

    `policy` follows the controllers protocol: a `label` attribute plus
    `start(config, demands)` returning a per-rollout callable
    `(state, t) -> ControlDecision`.
    """
    state = initial_state(config)
    decide = policy.start(config, demands)
    outcomes, states = [], []
    total = 0.0
    for t in range(1, config.horizon + 1):
        try:
            decision = decide(state, t)
        except Exception as exc:
            raise RuntimeError(f"policy {policy.label} failed at step {t}: {exc}") from exc
        state, outcome = step(state, decision, demands.realized[t - 1], config)
        outcomes.append(outcome)
        states.append(state)
        total += outcome.step_cost

    k = np.asarray(config.loss_costs)
    if config.terminal_flush:
        flush = state.queues.copy()
        total += float((flush * k).sum())
        state = PlantState(queues=np.zeros_like(state.queues), last_weights=state.last_weights)
        states[-1] = state
    else:
        flush = np.zeros_like(state.queues)
    return RunTrajectory(policy.label, run_index, outcomes, states, flush, total)
