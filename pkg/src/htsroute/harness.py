"""Monte-Carlo experiment driver.

Every method is rolled out on the *same* demand realization per run index
(paired comparison), so cost differences reflect the policies rather than
the draws.  Everything is keyed by run index and therefore deterministic
for a fixed base seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .arrivals import generate_demands
from .controllers import PolicyKind, ReplayPolicy, decide_offline, make_policy
from .domain import DemandTrajectory, ScenarioConfig, validate_config
from .plant import RunTrajectory, rollout


@dataclass
class MethodMetrics:
    """Per-method stacked series across runs."""

    label: str
    per_run_cost: np.ndarray          # (R,)
    losses: np.ndarray                # (R, T, P) summed over modules, flush in last step
    outflows: np.ndarray              # (R, T, P)
    queues: np.ndarray                # (R, T, P) end-of-step occupancy
    lp_objectives: np.ndarray | None  # (R,) offline methods only

    @property
    def mean_cost(self) -> float:
        return float(self.per_run_cost.mean())

    @property
    def std_cost(self) -> float:
        return float(self.per_run_cost.std(ddof=1)) if len(self.per_run_cost) > 1 else 0.0

    @property
    def stderr_cost(self) -> float:
        return self.std_cost / np.sqrt(len(self.per_run_cost))


@dataclass
class GapTable:
    """Percent above the hindsight baseline, or absolute costs if baseline is zero."""

    mode: str                      # "percent" | "zero_baseline"
    values: dict[str, float]


@dataclass
class AggregateMetrics:
    config: ScenarioConfig
    methods: list[str]
    per_method: dict[str, MethodMetrics]
    demand_hashes: list[str]
    mean_realized_demand: np.ndarray       # (T, P)
    first_run_demand: np.ndarray           # (T, P)
    invariant_violations: list[str] = field(default_factory=list)

    def mean_costs(self) -> dict[str, float]:
        return {m: self.per_method[m].mean_cost for m in self.methods}

    def gap_table(self) -> GapTable:
        return compute_gaps(self.mean_costs())


def compute_gaps(mean_costs: dict[str, float]) -> GapTable:
    """Percentage of each method's mean cost above batch_hindsight."""
    base = mean_costs.get("batch_hindsight")
    if base is None:
        raise ValueError("batch_hindsight baseline missing")
    if base <= 1e-9:
        return GapTable("zero_baseline", dict(mean_costs))
    return GapTable(
        "percent", {m: 100.0 * (c - base) / base for m, c in mean_costs.items()}
    )


def check_run_invariants(
    config: ScenarioConfig, traj: RunTrajectory, demands: DemandTrajectory
) -> list[str]:
    """Conservation, capacity and service-cap checks for one rollout."""
    errs = []
    tag = f"{traj.method} run {traj.run_index}"
    inflow = sum(o.inflows for o in traj.outcomes)
    outflow = sum(o.outflows for o in traj.outcomes)
    losses = sum(o.losses for o in traj.outcomes) + traj.flush_losses
    q_end = traj.states[-1].queues
    drift = np.abs(inflow - outflow - losses - (q_end - config.initial_queue)).max()
    if drift > 1e-9:
        errs.append(f"{tag}: conservation drift {drift:.2e}")
    cap = config.queue_capacity + 1e-9
    for i, (state, outcome) in enumerate(zip(traj.states, traj.outcomes)):
        if state.queues.sum(axis=1).max() > cap:
            errs.append(f"{tag}: capacity exceeded at step {i + 1}")
        service_cap = state.last_weights / config.scheduler_period + 1e-9
        if (outcome.outflows > service_cap).any() or (
            outcome.outflows > config.link_capacity + 1e-9
        ).any():
            errs.append(f"{tag}: service cap exceeded at step {i + 1}")
    total_in = sum(o.inflows.sum(axis=0) for o in traj.outcomes)
    if np.abs(total_in - demands.realized.sum(axis=0)).max() > 1e-6:
        errs.append(f"{tag}: inflow does not match realized demand")
    return errs


def _demand_hash(demands: DemandTrajectory) -> str:
    return hashlib.sha256(np.ascontiguousarray(demands.realized).tobytes()).hexdigest()


def run_monte_carlo(
    config: ScenarioConfig,
    methods: list[PolicyKind],
    check_invariants: bool = True,
    progress=None,
) -> AggregateMetrics:
    """Roll every method over num_runs shared demand realizations.

    `progress` is an optional callable(run_index, num_runs) for reporting.
    """
    validate_config(config)
    if not methods:
        raise ValueError("need at least one method")
    labels = [k.label for k in methods]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate methods")
    R, T, P = config.num_runs, config.horizon, config.num_priorities

    costs = {m: np.zeros(R) for m in labels}
    losses = {m: np.zeros((R, T, P)) for m in labels}
    outflows = {m: np.zeros((R, T, P)) for m in labels}
    queues = {m: np.zeros((R, T, P)) for m in labels}
    lp_objs = {k.label: np.zeros(R) if k.is_offline else None for k in methods}
    hashes = []
    violations = []
    demand_sum = np.zeros((T, P))
    first_run_demand = None

    for i in range(R):
        if progress:
            progress(i, R)
        demands = generate_demands(config, i)
        hashes.append(_demand_hash(demands))
        demand_sum += demands.realized
        if first_run_demand is None:
            first_run_demand = demands.realized.copy()
        for kind in methods:
            try:
                if kind.is_offline:
                    dec_traj, obj = decide_offline(kind, config, demands.realized)
                    lp_objs[kind.label][i] = obj
                    policy = ReplayPolicy(kind.label, dec_traj)
                else:
                    policy = make_policy(kind)
                traj = rollout(config, policy, demands, run_index=i)
            except Exception as exc:
                raise RuntimeError(f"run {i}, method {kind.label}: {exc}") from exc
            m = kind.label
            costs[m][i] = traj.cumulative_cost
            losses[m][i] = traj.losses_by_step()
            outflows[m][i] = traj.outflows_by_step()
            queues[m][i] = traj.queues_by_step()
            if check_invariants:
                violations.extend(check_run_invariants(config, traj, demands))

    per_method = {
        m: MethodMetrics(m, costs[m], losses[m], outflows[m], queues[m], lp_objs[m])
        for m in labels
    }
    return AggregateMetrics(
        config=config,
        methods=labels,
        per_method=per_method,
        demand_hashes=hashes,
        mean_realized_demand=demand_sum / R,
        first_run_demand=first_run_demand,
        invariant_violations=violations,
    )


@dataclass
class SweepResult:
    windows: list[int]
    mean_costs: dict[int, float]
    per_run_costs: dict[int, np.ndarray]

    def pct_vs(self, w_ref: int) -> dict[int, float]:
        ref = self.mean_costs[w_ref]
        if ref <= 0:
            raise ValueError("zero_baseline")
        return {w: 100.0 * (c - ref) / ref for w, c in self.mean_costs.items()}

    def adjacent_pct_changes(self) -> list[float]:
        """Percent change from each window to the next larger one."""
        ws = sorted(self.windows)
        out = []
        for a, b in zip(ws, ws[1:]):
            ca, cb = self.mean_costs[a], self.mean_costs[b]
            out.append(100.0 * (cb - ca) / ca if ca > 0 else 0.0)
        return out


def sweep_window(
    config: ScenarioConfig, window_values: list[int], progress=None
) -> SweepResult:
    """Mean cost of mpc(W) per W over identical paired demand realizations."""
    if any(w < 1 for w in window_values):
        raise ValueError("window values must be >= 1")
    mean_costs, per_run = {}, {}
    for w in window_values:
        metrics = run_monte_carlo(
            config, [PolicyKind("mpc", w)],
            check_invariants=False,
            progress=(lambda i, R, w=w: progress(w, i, R)) if progress else None,
        )
        mm = metrics.per_method[f"mpc_w{w}"]
        mean_costs[w] = mm.mean_cost
        per_run[w] = mm.per_run_cost
    return SweepResult(list(window_values), mean_costs, per_run)
