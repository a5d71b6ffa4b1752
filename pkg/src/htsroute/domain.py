"""Core scenario types shared by every other module.

All types are plain value objects: construct once, never mutate.  Matrices
are numpy arrays indexed [module, priority] or [step, priority]; step and
priority indices are 1-based in the public API (matching the operator's
view) and 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_LOSS_COSTS = (10.0, 4.0, 1.0)


class ConfigError(ValueError):
    """Raised when a scenario config violates its invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameter set for one experiment scenario.

    Defaults describe the standard benchmark scenario: 16 modules,
    3 priorities, 100 steps, MPC window of 10, loss costs (10, 4, 1),
    shared buffer of 10 packets per module, arrival rate ramping from
    10 to 100 packets/step divided by the priority's loss cost.
    """

    num_modules: int = 16
    num_priorities: int = 3
    horizon: int = 100
    window: int = 10
    loss_costs: tuple[float, ...] = DEFAULT_LOSS_COSTS
    queue_capacity: float = 10.0
    initial_queue: float = 0.0
    max_weight_step: float = 0.1
    scheduler_period: float = 0.1
    link_capacity: float = 10.0
    lambda_start: float = 10.0
    lambda_end: float = 100.0
    ramp_two_sided: bool = True
    terminal_flush: bool = True
    # "cost_divide": arrival rate is the base ramp divided by the priority's
    # loss cost (default).  "none": every priority follows the raw ramp,
    # which saturates the system late in the horizon.
    lambda_normalization: str = "cost_divide"
    num_runs: int = 100
    base_seed: int = 20240518
    # Physical step duration; metadata only, never enters the model.
    time_step_duration: float = 1.0

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


def config_violations(config: ScenarioConfig) -> list[str]:
    """Collect every invariant violation; empty list means valid."""
    errs = []

    def _dim(cond, msg):
        if not cond:
            errs.append("invalid_dimension: " + msg)

    def _rng(cond, msg):
        if not cond:
            errs.append("invalid_range: " + msg)

    _rng(config.num_modules >= 1, "num_modules")
    _rng(config.num_priorities >= 1, "num_priorities")
    _rng(config.horizon >= 1, "horizon")
    _rng(config.window >= 1, "window")
    _dim(len(config.loss_costs) == config.num_priorities, "loss_costs")
    _rng(all(k > 0 for k in config.loss_costs), "loss_costs")
    ks = config.loss_costs
    _rng(all(ks[i] >= ks[i + 1] for i in range(len(ks) - 1)), "loss_costs (must be nonincreasing)")
    _rng(config.queue_capacity >= 0, "queue_capacity")
    _rng(config.initial_queue >= 0, "initial_queue")
    _rng(config.initial_queue * config.num_priorities <= config.queue_capacity,
         "initial_queue (initial occupancy exceeds queue_capacity)")
    _rng(0 < config.max_weight_step <= 1, "max_weight_step")
    _rng(config.scheduler_period > 0, "scheduler_period")
    _rng(config.link_capacity > 0, "link_capacity")
    _rng(config.lambda_start >= 0, "lambda_start")
    _rng(config.lambda_end >= 0, "lambda_end")
    _rng(config.lambda_normalization in ("cost_divide", "none"), "lambda_normalization")
    _rng(config.num_runs >= 1, "num_runs")
    _rng(0 <= config.base_seed < 2**64, "base_seed")
    _rng(config.time_step_duration > 0, "time_step_duration")
    return errs


def validate_config(config: ScenarioConfig) -> ScenarioConfig:
    """Return the config unchanged if valid, else raise ConfigError with all violations."""
    errs = config_violations(config)
    if errs:
        raise ConfigError(errs)
    return config


def lambda_schedule(config: ScenarioConfig, t: int, p: int) -> float:
    """Arrival rate for priority p at step t (both 1-based).

    The base rate ramps linearly from lambda_start at t=1 to lambda_end
    at t=T and is divided by the priority's loss cost, so cheaper
    priorities arrive proportionally more often.
    """
    if not 1 <= t <= config.horizon:
        raise IndexError(f"step index {t} outside 1..{config.horizon}")
    if not 1 <= p <= config.num_priorities:
        raise IndexError(f"priority index {p} outside 1..{config.num_priorities}")
    if config.horizon == 1:
        base = config.lambda_start
    else:
        base = config.lambda_start + (config.lambda_end - config.lambda_start) * (t - 1) / (
            config.horizon - 1
        )
    if config.lambda_normalization == "none":
        return base
    return base / config.loss_costs[p - 1]


def schedule_matrix(config: ScenarioConfig) -> np.ndarray:
    """T x P matrix of arrival rates, schedule evaluated at every (t, p)."""
    T, P = config.horizon, config.num_priorities
    if T == 1:
        base = np.array([config.lambda_start])
    else:
        base = np.linspace(config.lambda_start, config.lambda_end, T)
    if config.lambda_normalization == "none":
        return np.repeat(base[:, None], P, axis=1)
    return base[:, None] / np.asarray(config.loss_costs)[None, :]


@dataclass(frozen=True)
class DemandTrajectory:
    """Realized and expected per-priority demand, T x P."""

    realized: np.ndarray
    expected: np.ndarray

    def __post_init__(self):
        if self.realized.shape != self.expected.shape:
            raise ValueError("realized/expected shape mismatch")
        if (self.realized < 0).any() or (self.expected < 0).any():
            raise ValueError("negative demand entry")


@dataclass(frozen=True)
class ControlDecision:
    """One step's implemented scheduler weights and planned inflow split, both M x P."""

    weights: np.ndarray
    inflow_plan: np.ndarray

    def __post_init__(self):
        if self.weights.shape != self.inflow_plan.shape:
            raise ValueError("weights/inflow_plan shape mismatch")
        sums = self.weights.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-6):
            raise ValueError("per-module weights must sum to 1")
        if (self.inflow_plan < 0).any():
            raise ValueError("negative planned inflow")


@dataclass(frozen=True)
class PlantState:
    """Queue occupancies (M x P) plus the last implemented weights, if any."""

    queues: np.ndarray
    last_weights: np.ndarray | None = None

    def __post_init__(self):
        if (self.queues < -1e-12).any():
            raise ValueError("negative queue occupancy")


def initial_state(config: ScenarioConfig) -> PlantState:
    M, P = config.num_modules, config.num_priorities
    return PlantState(queues=np.full((M, P), config.initial_queue), last_weights=None)
