"""Markov ON/OFF channel dynamics and exact belief tracking.

Each channel is a two-state chain (OFF=0, ON=1) with one-step matrix
[[1-p01, p01], [p10, 1-p10]].  Positive correlation (p01 + p10 < 1) is
required everywhere: it makes the k-step probabilities monotone in k,
which the round robin policies rely on.

Beliefs are stored as (last observed state, age) pairs rather than a
float probability.  The ON-probability is recomputed from the closed-form
k-step transition each time it is needed, so there is no drift from
iterating the one-slot belief recursion.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

OFF = 0
ON = 1
UNOBSERVED = -1

#: Age beyond which the belief is snapped to the stationary probability.
#: For any admissible x = p01 + p10 < 1 the difference is far below 1e-12
#: at this age.
DEFAULT_AGE_CAP = 10**6


@dataclass(frozen=True)
class ChannelModel:
    """One channel's transition probabilities."""

    p01: float
    p10: float

    def __post_init__(self) -> None:
        if not (0.0 < self.p01 < 1.0):
            raise ValueError(f"p01 must be in (0,1), got {self.p01}")
        if not (0.0 < self.p10 < 1.0):
            raise ValueError(f"p10 must be in (0,1), got {self.p10}")
        if self.p01 + self.p10 >= 1.0:
            raise ValueError(
                f"positive correlation requires p01 + p10 < 1, "
                f"got {self.p01} + {self.p10} = {self.p01 + self.p10}"
            )

    @property
    def p00(self) -> float:
        return 1.0 - self.p01

    @property
    def p11(self) -> float:
        return 1.0 - self.p10

    @property
    def x(self) -> float:
        """Correlation parameter p01 + p10, strictly inside (0, 1)."""
        return self.p01 + self.p10

    @property
    def pi_on(self) -> float:
        """Stationary probability of the ON state."""
        return self.p01 / (self.p01 + self.p10)

    def matrix(self) -> np.ndarray:
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])


def k_step_prob(
    model: ChannelModel,
    from_state: int,
    k: int,
    age_cap: int = DEFAULT_AGE_CAP,
) -> float:
    """Probability of being ON exactly k slots after observing `from_state`.

    Closed form: with x = p01 + p10 and pi = p01/x,
      P01^(k) = pi * (1 - (1-x)^k)
      P11^(k) = pi + (1 - pi) * (1-x)^k
    Ages at or above `age_cap` return the stationary probability.
    """
    if k < 1:
        raise ValueError(f"k-step probability needs k >= 1, got {k}")
    if from_state not in (OFF, ON):
        raise ValueError(f"from_state must be OFF (0) or ON (1), got {from_state}")
    pi = model.pi_on
    if k >= age_cap:
        return pi
    decay = (1.0 - model.x) ** k
    if from_state == OFF:
        return pi * (1.0 - decay)
    return pi + (1.0 - pi) * decay


@dataclass(frozen=True)
class BeliefState:
    """Per-channel (last observation, age) pairs.

    obs[n] is UNOBSERVED, OFF, or ON; age[n] is the number of slots since
    the observation (>= 1, meaningless when unobserved).  The derived
    ON-probability omega is always a k-step transition probability or the
    stationary probability, i.e. an element of the countable reachable set.
    """

    obs: np.ndarray
    age: np.ndarray
    age_cap: int = DEFAULT_AGE_CAP

    @classmethod
    def initial(cls, n: int, age_cap: int = DEFAULT_AGE_CAP) -> "BeliefState":
        """All channels unobserved; omega equals the stationary prior."""
        return cls(
            obs=np.full(n, UNOBSERVED, dtype=np.int8),
            age=np.zeros(n, dtype=np.int64),
            age_cap=age_cap,
        )

    @property
    def n(self) -> int:
        return self.obs.shape[0]

    def omega_n(self, models: Sequence[ChannelModel], n: int) -> float:
        """ON-probability of channel n under the current information."""
        s = int(self.obs[n])
        if s == UNOBSERVED:
            return models[n].pi_on
        return k_step_prob(models[n], s, int(self.age[n]), self.age_cap)

    def omega(self, models: Sequence[ChannelModel]) -> np.ndarray:
        return np.array([self.omega_n(models, n) for n in range(self.n)])


def update_belief(
    belief: BeliefState,
    observed: Optional[Tuple[int, int]] = None,
) -> BeliefState:
    """One-slot belief transition.

    `observed` is (channel index, observed state) for the single channel
    sensed this slot, or None for an idle slot.  The sensed channel resets
    to age 1; every other observed channel ages by one; unobserved
    channels stay unobserved (the stationary prior is a fixed point of the
    unobserved-channel recursion).
    """
    obs = belief.obs.copy()
    age = belief.age.copy()
    seen = obs != UNOBSERVED
    age[seen] = np.minimum(age[seen] + 1, belief.age_cap)
    if observed is not None:
        n, s = observed
        if s not in (OFF, ON):
            raise ValueError(f"observed state must be OFF or ON, got {s}")
        obs[n] = s
        age[n] = 1
    return replace(belief, obs=obs, age=age)


@dataclass(frozen=True)
class TrueChannelState:
    """Hidden per-channel states; visible only to the simulator."""

    states: np.ndarray

    @classmethod
    def sample_stationary(
        cls, models: Sequence[ChannelModel], rng: np.random.Generator
    ) -> "TrueChannelState":
        pi = np.array([m.pi_on for m in models])
        return cls(states=(rng.random(len(models)) < pi).astype(np.int8))

    @property
    def n(self) -> int:
        return self.states.shape[0]


def advance_true_state(
    state: TrueChannelState,
    models: Sequence[ChannelModel],
    rng: np.random.Generator,
) -> TrueChannelState:
    """Advance every channel one slot, independently."""
    p_on = np.array(
        [m.p11 if s == ON else m.p01 for m, s in zip(models, state.states)]
    )
    return TrueChannelState(states=(rng.random(state.n) < p_on).astype(np.int8))
