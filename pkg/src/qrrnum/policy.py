"""Executable service policies: one-round dynamic round robin and its
randomized mixture.

A round visits the active channels least-recently-used first.  At each
switch the policy flips one coin: with probability P01^(M) / omega it
transmits real packets until the first NACK, otherwise it spends a single
dummy sensing slot.  Either way the served channel is observed every
slot, so the belief state is refreshed exactly.

The hot loop works on plain Python lists and lazily advances unserved
channels with one k-step draw when they are next needed, which is
distributionally identical to stepping every chain every slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .capacity import ActivationVector
from .channel import (
    OFF,
    ON,
    UNOBSERVED,
    BeliefState,
    ChannelModel,
    TrueChannelState,
)
from .rngs import RngStreams

_FEAS_TOL = 1e-12


class FeasibilityError(RuntimeError):
    """The switch-probability ratio exceeded 1.

    Under least-recently-used-first ordering this cannot happen; tripping
    it indicates an ordering or belief bookkeeping bug.
    """


@dataclass(frozen=True)
class PolicyRandRR:
    """Stationary mixture over round robin subsets and the idle frame."""

    masks: Tuple[int, ...]
    weights: Tuple[float, ...]
    n: int

    def __post_init__(self) -> None:
        if len(self.masks) != len(self.weights):
            raise ValueError("masks and weights must align")
        if any(w < 0 for w in self.weights):
            raise ValueError("mixing weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(
                f"mixing weights must sum to 1, got {sum(self.weights)}"
            )
        for m in self.masks:
            if m < 0 or m >= (1 << self.n):
                raise ValueError(f"mask {m} out of range for n={self.n}")

    @classmethod
    def pure(cls, phi: ActivationVector) -> "PolicyRandRR":
        return cls(masks=(phi.mask,), weights=(1.0,), n=phi.n)

    @classmethod
    def idle(cls, n: int) -> "PolicyRandRR":
        return cls(masks=(0,), weights=(1.0,), n=n)

    def sample(self, u: float) -> int:
        acc = 0.0
        for m, w in zip(self.masks, self.weights):
            acc += w
            if u < acc:
                return m
        return self.masks[-1]


@dataclass(frozen=True)
class Visit:
    """One channel's stay within a round."""

    channel: int
    real: bool
    length: int
    end_state: int  # observed state in the final slot (OFF for real stays)


@dataclass(frozen=True)
class RoundTrace:
    """Slot-accountable record of one frame (a round or an idle slot)."""

    start: int
    phi_mask: int
    visits: Tuple[Visit, ...]
    length: int

    @property
    def idle(self) -> bool:
        return self.phi_mask == 0

    def slots(self) -> Iterator[Tuple[int, int, bool, int, int]]:
        """Yield (slot, channel, real, observed state, mu) per slot.

        Idle frames yield a single (slot, -1, False, -1, 0) record.
        """
        t = self.start
        if self.idle:
            yield (t, -1, False, -1, 0)
            return
        for v in self.visits:
            if v.real:
                for _ in range(v.length - 1):
                    yield (t, v.channel, True, ON, 1)
                    t += 1
                yield (t, v.channel, True, OFF, 0)
                t += 1
            else:
                yield (t, v.channel, False, v.end_state, 0)
                t += 1


@dataclass(frozen=True)
class RoundResult:
    trace: RoundTrace
    belief: BeliefState
    true_state: TrueChannelState
    lru_clock: np.ndarray
    t_end: int


def lru_order(phi: ActivationVector, lru_clock: Sequence[int]) -> List[int]:
    """Active channels, least recently visited first.

    Never-visited channels (clock -1) come first; ties break by ascending
    channel index.
    """
    return sorted(phi.active(), key=lambda i: (lru_clock[i], i))


class _ChannelParams:
    """Flattened per-channel constants for the slot loop."""

    __slots__ = (
        "p01", "p10", "p11", "pi", "one_minus_x", "log_p11", "age_cap", "pm01"
    )

    def __init__(self, models: Sequence[ChannelModel], age_cap: int):
        self.p01 = [m.p01 for m in models]
        self.p10 = [m.p10 for m in models]
        self.p11 = [m.p11 for m in models]
        self.pi = [m.pi_on for m in models]
        self.one_minus_x = [1.0 - m.x for m in models]
        self.log_p11 = [math.log(m.p11) for m in models]
        self.age_cap = age_cap
        n = len(models)
        # pm01[n][m] = P01^(m) for subset sizes m in 1..N
        self.pm01 = [
            [0.0] + [self._kstep(i, OFF, m) for m in range(1, n + 1)]
            for i in range(n)
        ]

    def _kstep(self, i: int, state: int, k: int) -> float:
        if k >= self.age_cap:
            return self.pi[i]
        decay = self.one_minus_x[i] ** k
        if state == OFF:
            return self.pi[i] * (1.0 - decay)
        return self.pi[i] + (1.0 - self.pi[i]) * decay

    def omega(self, i: int, obs: int, age: int) -> float:
        if obs == UNOBSERVED:
            return self.pi[i]
        return self._kstep(i, obs, min(age, self.age_cap))


def _execute_round(
    params: _ChannelParams,
    order: Sequence[int],
    m_phi: int,
    obs: List[int],
    obs_time: List[int],
    states: List[int],
    true_time: List[int],
    last_visit: List[int],
    t: int,
    rngs: RngStreams,
    visits_out: List[Tuple[int, bool, int, int]],
) -> int:
    """Run one round in place; returns the slot after the round.

    State lists are lazy: obs_time / true_time record when each entry was
    last valid, and channels are synced with a single k-step draw on
    demand.  Within a real stay the slot-by-slot Bernoulli chain is
    sampled in one shot as 1 + Geometric(p10) ON slots (the exact
    first-OFF time of the chain), which is distributionally identical.
    """
    chan_u = rngs.channel.u
    coin_u = rngs.coin.u
    pi = params.pi
    one_minus_x = params.one_minus_x
    age_cap = params.age_cap
    for n in order:
        # belief omega, inlined from the closed-form k-step probability
        pi_n = pi[n]
        o = obs[n]
        if o == UNOBSERVED:
            w = pi_n
        else:
            k = t - obs_time[n]
            if k >= age_cap:
                w = pi_n
            else:
                decay = one_minus_x[n] ** k
                if o == OFF:
                    w = pi_n * (1.0 - decay)
                else:
                    w = pi_n + (1.0 - pi_n) * decay
        pm = params.pm01[n][m_phi]
        if pm > w + _FEAS_TOL:
            raise FeasibilityError(
                f"switch to channel {n} at slot {t}: P01^({m_phi})={pm:.9f} "
                f"exceeds belief omega={w:.9f}"
            )
        # sync the true chain of n up to slot t with a single k-step draw
        k = t - true_time[n]
        if k > 0:
            if k >= age_cap:
                p = pi_n
            else:
                decay = one_minus_x[n] ** k
                if states[n] == OFF:
                    p = pi_n * (1.0 - decay)
                else:
                    p = pi_n + (1.0 - pi_n) * decay
            states[n] = 1 if chan_u() < p else 0
            true_time[n] = t
        if coin_u() < pm / w:
            # stay: transmit real packets until the first NACK
            if states[n] == OFF:
                length = 1
            else:
                u = chan_u()
                if u <= 0.0:
                    u = 5e-324
                length = 2 + int(math.log(u) / params.log_p11[n])
            t += length
            states[n] = OFF
            true_time[n] = t - 1
            obs[n] = OFF
            obs_time[n] = t - 1
            visits_out.append((n, True, length, OFF))
        else:
            # one dummy sensing slot; the observed state stays valid
            s = states[n]
            obs[n] = s
            obs_time[n] = t
            t += 1
            visits_out.append((n, False, 1, s))
        last_visit[n] = t - 1
    return t


def _materialize(
    params: _ChannelParams,
    obs: List[int],
    obs_time: List[int],
    states: List[int],
    true_time: List[int],
    t: int,
    rngs: RngStreams,
) -> None:
    """Bring every lazy chain forward to slot t in place."""
    for n in range(len(states)):
        k = t - true_time[n]
        if k > 0:
            states[n] = 1 if rngs.channel.u() < params._kstep(n, states[n], k) else 0
            true_time[n] = t


def _unpack(
    belief: BeliefState, true_state: TrueChannelState, t: int
) -> Tuple[List[int], List[int], List[int], List[int]]:
    obs = [int(v) for v in belief.obs]
    obs_time = [
        t - int(a) if o != UNOBSERVED else 0
        for o, a in zip(obs, belief.age)
    ]
    states = [int(s) for s in true_state.states]
    true_time = [t] * len(states)
    return obs, obs_time, states, true_time


def _pack_belief(
    obs: List[int], obs_time: List[int], t: int, age_cap: int
) -> BeliefState:
    n = len(obs)
    age = np.zeros(n, dtype=np.int64)
    for i in range(n):
        if obs[i] != UNOBSERVED:
            age[i] = min(t - obs_time[i], age_cap)
    return BeliefState(
        obs=np.array(obs, dtype=np.int8), age=age, age_cap=age_cap
    )


def run_rr_round(
    models: Sequence[ChannelModel],
    phi: ActivationVector,
    belief: BeliefState,
    true_state: TrueChannelState,
    lru_clock: Sequence[int],
    t: int,
    rngs: RngStreams,
) -> RoundResult:
    """Execute one round of the dynamic round robin over `phi`."""
    if phi.mask == 0:
        raise ValueError("use run_randrr_frame for idle frames")
    params = _ChannelParams(models, belief.age_cap)
    obs, obs_time, states, true_time = _unpack(belief, true_state, t)
    last_visit = [int(v) for v in lru_clock]
    order = lru_order(phi, last_visit)
    visits: List[Tuple[int, bool, int, int]] = []
    t_end = _execute_round(
        params, order, phi.m, obs, obs_time, states, true_time,
        last_visit, t, rngs, visits,
    )
    _materialize(params, obs, obs_time, states, true_time, t_end, rngs)
    trace = RoundTrace(
        start=t,
        phi_mask=phi.mask,
        visits=tuple(Visit(*v) for v in visits),
        length=t_end - t,
    )
    return RoundResult(
        trace=trace,
        belief=_pack_belief(obs, obs_time, t_end, belief.age_cap),
        true_state=TrueChannelState(states=np.array(states, dtype=np.int8)),
        lru_clock=np.array(last_visit, dtype=np.int64),
        t_end=t_end,
    )


def run_randrr_frame(
    models: Sequence[ChannelModel],
    policy: PolicyRandRR,
    belief: BeliefState,
    true_state: TrueChannelState,
    lru_clock: Sequence[int],
    t: int,
    rngs: RngStreams,
) -> RoundResult:
    """Sample a subset from the mixture and run one frame.

    The zero subset idles for one slot: no channel is observed, every
    belief ages, and every chain advances.
    """
    mask = policy.sample(rngs.mix.u())
    if mask != 0:
        phi = ActivationVector(mask=mask, n=policy.n)
        return run_rr_round(models, phi, belief, true_state, lru_clock, t, rngs)
    params = _ChannelParams(models, belief.age_cap)
    obs, obs_time, states, true_time = _unpack(belief, true_state, t)
    t_end = t + 1
    _materialize(params, obs, obs_time, states, true_time, t_end, rngs)
    trace = RoundTrace(start=t, phi_mask=0, visits=(), length=1)
    return RoundResult(
        trace=trace,
        belief=_pack_belief(obs, obs_time, t_end, belief.age_cap),
        true_state=TrueChannelState(states=np.array(states, dtype=np.int8)),
        lru_clock=np.array(lru_clock, dtype=np.int64),
        t_end=t_end,
    )
