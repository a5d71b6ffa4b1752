"""Seeded demand generation.

Uses a self-contained SplitMix64 generator plus inverse-transform Poisson
sampling so trajectories are bit-reproducible for a given seed regardless
of platform or numpy version.
"""

from __future__ import annotations

import math

import numpy as np

from .domain import DemandTrajectory, ScenarioConfig, schedule_matrix

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

MEAN_GUARD = 1e6


class MeanOverflowError(ValueError):
    """Poisson mean exceeds the sampling guard."""


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance SplitMix64 by one step; returns (new state, 64-bit output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def uniform01(state: int) -> tuple[int, float]:
    """Uniform double in [0, 1) from the top 53 bits of the next output."""
    state, x = splitmix64_next(state)
    return state, (x >> 11) * (1.0 / (1 << 53))


def poisson_inverse_cdf(u: float, mean: float) -> int:
    """Smallest k with Poisson CDF(k) > u, via p_{k+1} = p_k * mean / (k+1)."""
    k = 0
    p = math.exp(-mean)
    cdf = p
    while cdf <= u:
        k += 1
        p *= mean / k
        cdf += p
        if p < 1e-300 and cdf <= u:
            # u fell in the negligible upper tail; stop at the current k
            break
    return k


def sample_poisson(state: int, mean: float) -> tuple[int, int]:
    """Inverse-transform Poisson draw.

    Exactly one RNG advance happens per sample, so streams stay aligned
    across implementations.
    """
    if mean < 0 or mean > MEAN_GUARD:
        raise MeanOverflowError(f"mean_overflow: {mean}")
    if mean == 0:
        return state, 0
    state, u = uniform01(state)
    return state, poisson_inverse_cdf(u, mean)


def mix_seed(a: int, b: int, c: int) -> int:
    """Fold (base seed, run index, priority) into one SplitMix64 seed."""
    raw = (a ^ ((b * _GOLDEN) & _MASK64) ^ ((c * _MIX1) & _MASK64)) & _MASK64
    _, out = splitmix64_next(raw)
    return out


def generate_demands(config: ScenarioConfig, run_index: int) -> DemandTrajectory:
    """One run's realized Poisson demands plus their expectations (T x P)."""
    if run_index < 0:
        raise ValueError("run_index must be >= 0")
    expected = schedule_matrix(config)
    T, P = expected.shape
    realized = np.zeros((T, P))
    for p in range(P):
        state = mix_seed(config.base_seed, run_index, p + 1)
        for t in range(T):
            state, k = sample_poisson(state, expected[t, p])
            realized[t, p] = k
    return DemandTrajectory(realized=realized, expected=expected)
