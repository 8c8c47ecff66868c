"""Separable concave utility functions over per-user rates in [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

_FD_STEP = 1e-6


@dataclass(frozen=True)
class UserUtility:
    """One user's utility term.

    kind 'log1p' is weight * log(1 + r), 'linear' is weight * r, and
    'generic' wraps a user-supplied concave nondecreasing evaluator on
    [0, 1] with fn(0) >= 0.
    """

    kind: str
    weight: float = 1.0
    fn: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("log1p", "linear", "generic"):
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.weight < 0:
            raise ValueError("utility weight must be nonnegative")
        if self.kind == "generic":
            if self.fn is None:
                raise ValueError("generic utility needs an evaluator")
            if self.fn(0.0) < -1e-12:
                raise ValueError("utility must be nonnegative at 0")

    def value(self, r: float) -> float:
        if self.kind == "log1p":
            return self.weight * float(np.log1p(r))
        if self.kind == "linear":
            return self.weight * r
        return float(self.fn(r))

    def derivative(self, r: float) -> float:
        if self.kind == "log1p":
            return self.weight / (1.0 + r)
        if self.kind == "linear":
            return self.weight
        lo = max(r - _FD_STEP, 0.0)
        hi = min(r + _FD_STEP, 1.0)
        return (self.fn(hi) - self.fn(lo)) / (hi - lo)


@dataclass(frozen=True)
class UtilityFunction:
    """Sum of per-user utilities; concave, nonnegative, nondecreasing."""

    users: Tuple[UserUtility, ...]

    @classmethod
    def log1p(cls, weights: Sequence[float]) -> "UtilityFunction":
        return cls(users=tuple(UserUtility("log1p", w) for w in weights))

    @classmethod
    def linear(cls, weights: Sequence[float]) -> "UtilityFunction":
        return cls(users=tuple(UserUtility("linear", w) for w in weights))

    @property
    def n(self) -> int:
        return len(self.users)

    def value(self, r: Sequence[float]) -> float:
        return sum(u.value(float(ri)) for u, ri in zip(self.users, r))

    def gradient(self, r: Sequence[float]) -> np.ndarray:
        return np.array(
            [u.derivative(float(ri)) for u, ri in zip(self.users, r)]
        )

    @property
    def g_max(self) -> float:
        """Utility ceiling g(1, ..., 1)."""
        return self.value(np.ones(self.n))
