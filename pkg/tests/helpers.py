"""Shared test utilities: random admissible channels and brute-force
oracles kept deliberately independent of the library's closed forms."""

from __future__ import annotations

import numpy as np

from qrrnum import ChannelModel


def random_model(
    rng: np.random.Generator,
    lo: float = 0.05,
    hi: float = 0.6,
    x_max: float = 0.95,
) -> ChannelModel:
    """One random channel with positive correlation."""
    while True:
        p01 = float(rng.uniform(lo, hi))
        p10 = float(rng.uniform(lo, hi))
        if p01 + p10 < x_max:
            return ChannelModel(p01, p10)


def random_models(rng: np.random.Generator, n: int, **kw) -> tuple:
    return tuple(random_model(rng, **kw) for _ in range(n))


def matrix_power_on_prob(model: ChannelModel, from_state: int, k: int) -> float:
    """Brute-force oracle: ON probability after k one-step multiplications."""
    row = np.zeros(2)
    row[from_state] = 1.0
    p = model.matrix()
    for _ in range(k):
        row = row @ p
    return float(row[1])


def stay_pmf_oracle(q: float, p10: float, j: int) -> float:
    """Stay-length law straight from its definition."""
    if j < 1:
        return 0.0
    if j == 1:
        return 1.0 - q
    return q * (1.0 - p10) ** (j - 2) * p10


def stay_second_moment_truncated(
    q: float, p10: float, tail: float = 1e-12
) -> float:
    """Truncated-sum oracle for E[stay^2]; stops when the tail is < tail."""
    total = 1.0 * (1.0 - q)
    j = 2
    while True:
        mass = stay_pmf_oracle(q, p10, j)
        total += j * j * mass
        # remaining mass is a geometric tail starting at j+1
        remaining = q * (1.0 - p10) ** (j - 1)
        if remaining * (j + 1 + 2.0 / p10) ** 2 < tail:
            return total
        j += 1
