import numpy as np
import pytest

from htsroute.domain import ScenarioConfig

# verdict lines recorded by the acceptance tests, echoed after the run
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_lines):
            terminalreporter.write_line(line)


@pytest.fixture
def small_config():
    return ScenarioConfig(
        num_modules=2,
        num_priorities=2,
        horizon=6,
        window=3,
        loss_costs=(10.0, 1.0),
        queue_capacity=5.0,
        lambda_start=5.0,
        lambda_end=30.0,
        num_runs=3,
        base_seed=42,
    )


def random_small_config(rng: np.random.Generator) -> ScenarioConfig:
    """Random tiny scenario (M<=3, P<=3, T<=6) for property-style sweeps."""
    P = int(rng.integers(1, 4))
    costs = np.sort(rng.uniform(0.5, 10.0, size=P))[::-1]
    return ScenarioConfig(
        num_modules=int(rng.integers(1, 4)),
        num_priorities=P,
        horizon=int(rng.integers(1, 7)),
        window=int(rng.integers(1, 4)),
        loss_costs=tuple(float(c) for c in costs),
        queue_capacity=float(rng.uniform(0.0, 8.0)),
        initial_queue=0.0,
        max_weight_step=float(rng.uniform(0.05, 1.0)),
        scheduler_period=float(rng.uniform(0.05, 0.5)),
        link_capacity=float(rng.uniform(1.0, 20.0)),
        lambda_start=float(rng.uniform(0.5, 5.0)),
        lambda_end=float(rng.uniform(0.5, 20.0)),
        num_runs=1,
        base_seed=int(rng.integers(0, 2**32)),
    )


def random_demands(rng: np.random.Generator, config: ScenarioConfig, high: int = 6) -> np.ndarray:
    return rng.integers(0, high, size=(config.horizon, config.num_priorities)).astype(float)
