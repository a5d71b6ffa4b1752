"""Time-expanded flow LPs: full-horizon batch, static batch, cost-proportional,
and the per-step receding-horizon window.

All four share one assembly routine; they differ only in which steps are
covered, where the initial/terminal queue levels come from, and whether the
scheduler weights are free, pinned to the first step, or fixed outright.

Variable layout (flat indices): five step-indexed families f_in, f_out, w,
dq, loss of shape (n, M, P), followed by queue levels q of shape
(n+1, M, P), where n is the number of covered steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import ControlDecision, PlantState, ScenarioConfig
from .lp_core import EQ, LE, LpProblem, LpSolution, OPTIMAL


class NotOptimalError(RuntimeError):
    """Decision extraction attempted on a non-optimal solve."""


@dataclass(frozen=True)
class VarMap:
    """Index arrays from (local step, module, priority) into the flat LP vector."""

    steps: tuple[int, ...]          # global 1-based step numbers covered
    num_modules: int
    num_priorities: int
    f_in: np.ndarray                # (n, M, P)
    f_out: np.ndarray
    w: np.ndarray
    dq: np.ndarray
    loss: np.ndarray
    q: np.ndarray                   # (n+1, M, P); q[0] is the window-entry level

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    @property
    def num_vars(self) -> int:
        return int(self.q[-1, -1, -1]) + 1 if self.q.size else 0


def _make_varmap(steps, M, P) -> VarMap:
    n = len(steps)
    nmp = n * M * P
    fam = lambda k: np.arange(nmp).reshape(n, M, P) + k * nmp
    q = 5 * nmp + np.arange((n + 1) * M * P).reshape(n + 1, M, P)
    return VarMap(tuple(steps), M, P, fam(0), fam(1), fam(2), fam(3), fam(4), q)


def _assemble(
    config: ScenarioConfig,
    steps,
    demands: np.ndarray,
    q_init: np.ndarray,
    prev_weights: np.ndarray | None,
    terminal: bool,
    static_weights: bool = False,
    fixed_weights: np.ndarray | None = None,
) -> tuple[LpProblem, VarMap]:
    M, P = config.num_modules, config.num_priorities
    n = len(steps)
    if demands.shape != (n, P):
        raise ValueError(f"demand matrix must be {(n, P)}, got {demands.shape}")
    vm = _make_varmap(steps, M, P)
    nmp = n * M * P
    num_vars = 5 * nmp + (n + 1) * M * P
    lp = LpProblem(num_vars)

    k = np.asarray(config.loss_costs)
    lp.set_objective(vm.loss.ravel(), np.tile(k, n * M))

    lp.lower[vm.dq.ravel()] = -np.inf
    lp.upper[vm.w.ravel()] = 1.0
    lp.upper[vm.f_out.ravel()] = config.link_capacity
    lp.fix(vm.q[0].ravel(), np.asarray(q_init, dtype=float).ravel())
    if terminal:
        lp.fix(vm.q[n].ravel(), config.initial_queue)
    if fixed_weights is not None:
        lp.fix(vm.w.ravel(), np.tile(np.asarray(fixed_weights).ravel(), n))

    i = np.arange(nmp)
    ones = np.ones(nmp)

    # per-cell flow balance: f_in - f_out - dq - loss = 0
    lp.add_rows(
        np.tile(i, 4),
        np.concatenate([vm.f_in.ravel(), vm.f_out.ravel(), vm.dq.ravel(), vm.loss.ravel()]),
        np.concatenate([ones, -ones, -ones, -ones]),
        np.full(nmp, EQ), np.zeros(nmp),
    )
    # per-module weight simplex
    lp.add_rows(
        np.repeat(np.arange(n * M), P), vm.w.reshape(n * M, P).ravel(),
        np.ones(nmp), np.full(n * M, EQ), np.ones(n * M),
    )
    # service cap: f_out <= w / scheduler_period
    lp.add_rows(
        np.tile(i, 2),
        np.concatenate([vm.f_out.ravel(), vm.w.ravel()]),
        np.concatenate([ones, -ones / config.scheduler_period]),
        np.full(nmp, LE), np.zeros(nmp),
    )
    # demand coverage: sum over modules of f_in equals the step demand
    lp.add_rows(
        np.repeat(np.arange(n * P), M), vm.f_in.transpose(0, 2, 1).ravel(),
        np.ones(nmp), np.full(n * P, EQ), demands.ravel(),
    )
    # queue recursion: q(t) - q(t-1) - dq(t) = 0
    lp.add_rows(
        np.tile(i, 3),
        np.concatenate([vm.q[1:].ravel(), vm.q[:-1].ravel(), vm.dq.ravel()]),
        np.concatenate([ones, -ones, -ones]),
        np.full(nmp, EQ), np.zeros(nmp),
    )
    # shared buffer: sum over priorities of q <= capacity
    lp.add_rows(
        np.repeat(np.arange(n * M), P), vm.q[1:].reshape(n * M, P).ravel(),
        np.ones(nmp), np.full(n * M, LE), np.full(n * M, config.queue_capacity),
    )

    if fixed_weights is None:
        _add_ramp_rows(lp, vm, config, prev_weights)
    if static_weights and n > 1:
        m = (n - 1) * M * P
        lp.add_rows(
            np.tile(np.arange(m), 2),
            np.concatenate([vm.w[1:].ravel(), np.tile(vm.w[0].ravel(), n - 1)]),
            np.concatenate([np.ones(m), -np.ones(m)]),
            np.full(m, EQ), np.zeros(m),
        )
    return lp, vm


def _add_ramp_rows(lp, vm, config, prev_weights):
    dw = config.max_weight_step
    n, M, P = vm.num_steps, vm.num_modules, vm.num_priorities
    if n > 1:
        m = (n - 1) * M * P
        hi, lo = vm.w[1:].ravel(), vm.w[:-1].ravel()
        lp.add_rows(
            np.tile(np.arange(m), 2), np.concatenate([hi, lo]),
            np.concatenate([np.ones(m), -np.ones(m)]),
            np.full(m, LE), np.full(m, dw),
        )
        if config.ramp_two_sided:
            lp.add_rows(
                np.tile(np.arange(m), 2), np.concatenate([hi, lo]),
                np.concatenate([-np.ones(m), np.ones(m)]),
                np.full(m, LE), np.full(m, dw),
            )
    if prev_weights is not None:
        prev = np.asarray(prev_weights, dtype=float).ravel()
        m = M * P
        first = vm.w[0].ravel()
        lp.add_rows(np.arange(m), first, np.ones(m), np.full(m, LE), prev + dw)
        if config.ramp_two_sided:
            lp.add_rows(np.arange(m), first, -np.ones(m), np.full(m, LE), dw - prev)


def build_batch(config: ScenarioConfig, flows: np.ndarray) -> tuple[LpProblem, VarMap]:
    """Full-horizon LP on known flows; the hindsight benchmark."""
    T, M, P = config.horizon, config.num_modules, config.num_priorities
    q0 = np.full((M, P), config.initial_queue)
    return _assemble(config, range(1, T + 1), np.asarray(flows, dtype=float), q0,
                     prev_weights=None, terminal=True)


def build_static_batch(config: ScenarioConfig, flows: np.ndarray) -> tuple[LpProblem, VarMap]:
    """Hindsight LP with weights frozen at their first-step values."""
    T, M, P = config.horizon, config.num_modules, config.num_priorities
    q0 = np.full((M, P), config.initial_queue)
    return _assemble(config, range(1, T + 1), np.asarray(flows, dtype=float), q0,
                     prev_weights=None, terminal=True, static_weights=True)


def proportional_weights(config: ScenarioConfig) -> np.ndarray:
    k = np.asarray(config.loss_costs)
    return k / k.sum()


def build_proportional(config: ScenarioConfig, flows: np.ndarray) -> tuple[LpProblem, VarMap]:
    """Hindsight LP with weights fixed proportional to loss costs; ramp rows vacuous, omitted."""
    T, M, P = config.horizon, config.num_modules, config.num_priorities
    q0 = np.full((M, P), config.initial_queue)
    w = np.tile(proportional_weights(config), (M, 1))
    return _assemble(config, range(1, T + 1), np.asarray(flows, dtype=float), q0,
                     prev_weights=None, terminal=True, fixed_weights=w)


def build_mpc_window(
    config: ScenarioConfig,
    queue_state: PlantState,
    t: int,
    expected: np.ndarray,
    prev_weights: np.ndarray | None = None,
    window: int | None = None,
) -> tuple[LpProblem, VarMap]:
    """Window LP starting at step t over expected demand.

    `expected` is the full T x P expectation matrix; the covered steps are
    t .. min(t + W - 1, T).  The terminal queue equality only applies when
    the window reaches the end of the horizon.
    """
    W = config.window if window is None else window
    T = config.horizon
    if not 1 <= t <= T:
        raise IndexError(f"step {t} outside 1..{T}")
    last = min(t + W - 1, T)
    steps = range(t, last + 1)
    demands = np.asarray(expected, dtype=float)[t - 1:last]
    return _assemble(config, steps, demands, queue_state.queues,
                     prev_weights=prev_weights, terminal=(last == T))


@dataclass(frozen=True)
class DecisionTrajectory:
    """Per-step decisions plus the LP's planned outflows/losses for replay."""

    decisions: list[ControlDecision]
    planned_outflows: np.ndarray    # (n, M, P)
    planned_losses: np.ndarray      # (n, M, P)


def _clean_decision(w: np.ndarray, f_in: np.ndarray) -> ControlDecision:
    w = np.clip(w, 0.0, 1.0)
    w = w / w.sum(axis=1, keepdims=True)
    return ControlDecision(weights=w, inflow_plan=np.maximum(f_in, 0.0))


def extract_decisions(solution: LpSolution, varmap: VarMap, step: int | None = None):
    """Pull weights and planned inflow splits out of an optimal solution.

    With `step` (local, 0-based) returns that step's ControlDecision;
    without, a DecisionTrajectory over the whole covered range.  Weights
    are clamped to [0, 1] and renormalized to sum exactly 1 per module.
    """
    if solution.status != OPTIMAL:
        raise NotOptimalError(f"not_optimal: status={solution.status}")
    x = solution.values
    if step is not None:
        return _clean_decision(x[varmap.w[step]], x[varmap.f_in[step]])
    decisions = [
        _clean_decision(x[varmap.w[i]], x[varmap.f_in[i]]) for i in range(varmap.num_steps)
    ]
    return DecisionTrajectory(
        decisions=decisions,
        planned_outflows=np.maximum(x[varmap.f_out.ravel()].reshape(varmap.f_out.shape), 0.0),
        planned_losses=np.maximum(x[varmap.loss.ravel()].reshape(varmap.loss.shape), 0.0),
    )
