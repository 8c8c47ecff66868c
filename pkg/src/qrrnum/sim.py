"""Discrete-time frame-based simulation engine.

Runs the online controller (or a fixed policy) frame by frame, applies
the per-slot queue recursion Q <- Q - y + r with y = min(Q, mu), and
collects long-run averages.  Queues are represented by the exact ledger
pair (cumulative admitted, cumulative delivered), so the identity
Q(t) = admitted(t) - delivered(t) holds bit-for-bit in every slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import controller as ctrl
from .capacity import ActivationVector, DEFAULT_ENUM_CAP
from .channel import DEFAULT_AGE_CAP, UNOBSERVED, ChannelModel
from .policy import PolicyRandRR, _ChannelParams, _execute_round
from .rngs import RngStreams
from .utility import UtilityFunction

#: Default backlog-growth threshold (packets/slot) separating stable
#: from unstable runs.
STABILITY_SLOPE_THRESHOLD = 1e-3


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs; the seed is always explicit."""

    models: Tuple[ChannelModel, ...]
    horizon: int
    seed: int
    utility: Optional[UtilityFunction] = None
    v_g: Optional[float] = None
    mode: str = "exhaustive"
    warmup: Optional[int] = None  # None means horizon // 10
    age_cap: int = DEFAULT_AGE_CAP
    enum_cap: int = DEFAULT_ENUM_CAP
    record_frames: bool = False
    record_stays: bool = False

    def __post_init__(self) -> None:
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        w = self.effective_warmup
        if not (0 <= w <= self.horizon):
            raise ValueError(
                f"need horizon >= warmup >= 0, got {self.horizon} / {w}"
            )

    @property
    def n(self) -> int:
        return len(self.models)

    @property
    def effective_warmup(self) -> int:
        return self.horizon // 10 if self.warmup is None else self.warmup


@dataclass
class FrameLog:
    t: List[int] = field(default_factory=list)
    length: List[int] = field(default_factory=list)
    mask: List[int] = field(default_factory=list)
    r: List[np.ndarray] = field(default_factory=list)
    q: List[np.ndarray] = field(default_factory=list)


@dataclass
class RunMetrics:
    """Aggregates of one run; averages exclude the warmup window."""

    n: int
    seed: int
    horizon: int
    t_end: int
    warmup_t: int
    warmup_requested: int
    cum_admitted: np.ndarray
    cum_delivered: np.ndarray
    final_q: np.ndarray
    rbar: np.ndarray
    ybar: np.ndarray
    mean_backlog: float
    backlog: np.ndarray  # total backlog at the start of every slot
    utility_of_ybar: Optional[float]
    frames: Optional[FrameLog]
    stay_counts: Optional[dict]
    frame_count: int


Decider = Callable[[Sequence[float], int, RngStreams], Tuple[np.ndarray, int]]


def _simulate(
    config: RunConfig, decide: Decider, needs_q: bool = True
) -> RunMetrics:
    n = config.n
    horizon = config.horizon
    if horizon == 0:
        z = np.zeros(n)
        return RunMetrics(
            n=n, seed=config.seed, horizon=0, t_end=0, warmup_t=0,
            warmup_requested=0,
            cum_admitted=z.copy(), cum_delivered=z.copy(), final_q=z.copy(),
            rbar=z.copy(), ybar=z.copy(), mean_backlog=0.0,
            backlog=np.zeros(0),
            utility_of_ybar=(
                config.utility.value(z) if config.utility else None
            ),
            frames=FrameLog() if config.record_frames else None,
            stay_counts={} if config.record_stays else None,
            frame_count=0,
        )

    rngs = RngStreams(config.seed)
    params = _ChannelParams(config.models, config.age_cap)
    obs = [UNOBSERVED] * n
    obs_time = [0] * n
    # hidden initial states from the stationary prior, matching the
    # unobserved initial belief
    states = [1 if rngs.channel.u() < params.pi[i] else 0 for i in range(n)]
    true_time = [0] * n
    last_visit = [-1] * n

    cum_r = [0.0] * n
    cum_y = [0.0] * n
    sum_q = 0.0
    backlog_list: List[float] = []
    snap = backlog_list.append  # one call per slot: start-of-slot backlog
    t = 0
    warmup = config.effective_warmup
    warmup_t = -1
    warm_r = [0.0] * n
    warm_y = [0.0] * n
    frames = FrameLog() if config.record_frames else None
    stay_counts: Optional[dict] = {} if config.record_stays else None
    frame_count = 0
    visits: List[Tuple[int, bool, int, int]] = []
    # per-mask (M, active channels) cache; masks repeat heavily
    subset_cache: dict = {}
    last_r_vec: object = None
    r: List[float] = [0.0] * n
    big_r = 0.0
    want_q = needs_q or frames is not None
    q: Sequence[float] = ()

    while t < horizon:
        if warmup_t < 0 and t >= warmup:
            warmup_t = t
            warm_r = cum_r.copy()
            warm_y = cum_y.copy()
        if want_q:
            q = [cum_r[i] - cum_y[i] for i in range(n)]
        r_vec, mask = decide(q, t, rngs)
        if r_vec is not last_r_vec:  # fixed policies reuse one vector
            last_r_vec = r_vec
            r = [float(v) for v in r_vec]
            big_r = sum(r)
        if frames is not None:
            frames.t.append(t)
            frames.mask.append(mask)
            frames.r.append(np.array(r))
            frames.q.append(np.array(q))
        t0 = t
        if mask == 0:
            snap(sum_q)
            sum_q += big_r
            t += 1
        else:
            cached = subset_cache.get(mask)
            if cached is None:
                phi = ActivationVector(mask=mask, n=n)
                cached = (phi.m, phi.active())
                subset_cache[mask] = cached
            m_phi, active = cached
            # stable sort on the clock alone keeps ascending-index ties
            order = sorted(active, key=last_visit.__getitem__)
            visits.clear()
            t_end = _execute_round(
                params, order, m_phi, obs, obs_time, states, true_time,
                last_visit, t, rngs, visits,
            )
            j = 0
            for c, real, length, _end_state in visits:
                if stay_counts is not None:
                    per = stay_counts.setdefault(c, {})
                    per[length] = per.get(length, 0) + 1
                if real and length > 1:
                    rc = r[c]
                    base = cum_r[c]
                    cyc = cum_y[c]
                    qc = base + j * rc - cyc
                    if qc - (length - 2) * (1.0 - rc) >= 1.0:
                        # queue cannot dip below one packet: y = 1 every
                        # served slot
                        step = big_r - 1.0
                        for _ in range(length - 1):
                            snap(sum_q)
                            sum_q += step
                        cum_y[c] = cyc + (length - 1)
                        snap(sum_q)
                        sum_q += big_r
                        t = t0 + j + length
                        j += length
                    else:
                        for _ in range(length - 1):
                            snap(sum_q)
                            qc = base + j * rc - cyc
                            y = qc if qc < 1.0 else 1.0
                            cyc += y
                            sum_q += big_r - y
                            j += 1
                        cum_y[c] = cyc
                        snap(sum_q)
                        sum_q += big_r
                        j += 1
                        t = t0 + j
                else:
                    snap(sum_q)
                    sum_q += big_r
                    t += 1
                    j += 1
            assert t == t_end
        frame_len = t - t0
        sum_q = 0.0
        for i in range(n):
            cum_r[i] += frame_len * r[i]
            sum_q += cum_r[i] - cum_y[i]  # re-anchor trajectory to ledger
        if frames is not None:
            frames.length.append(frame_len)
        frame_count += 1

    t_end = t
    if warmup_t < 0:  # warmup == horizon edge
        warmup_t = t_end
        warm_r = cum_r.copy()
        warm_y = cum_y.copy()
    span = max(t_end - warmup_t, 1)
    cum_admitted = np.array(cum_r)
    cum_delivered = np.array(cum_y)
    rbar = (cum_admitted - np.array(warm_r)) / span
    ybar = (cum_delivered - np.array(warm_y)) / span
    backlog = np.array(backlog_list)
    mean_backlog = (
        float(np.mean(backlog[warmup_t:])) if t_end > warmup_t else 0.0
    )
    return RunMetrics(
        n=n,
        seed=config.seed,
        horizon=horizon,
        t_end=t_end,
        warmup_t=warmup_t,
        warmup_requested=warmup,
        cum_admitted=cum_admitted,
        cum_delivered=cum_delivered,
        final_q=cum_admitted - cum_delivered,
        rbar=rbar,
        ybar=ybar,
        mean_backlog=mean_backlog,
        backlog=backlog,
        utility_of_ybar=(
            config.utility.value(ybar) if config.utility else None
        ),
        frames=frames,
        stay_counts=stay_counts,
        frame_count=frame_count,
    )


def run_qrrnum(config: RunConfig) -> RunMetrics:
    """Run the queue-dependent round robin controller for one horizon."""
    if config.utility is None or config.v_g is None:
        raise ValueError("controller runs need a utility function and V_g")
    g = config.utility
    v_g = config.v_g
    models = config.models
    mode = config.mode
    enum_cap = config.enum_cap

    def decide(
        q: Sequence[float], _t: int, _rngs: RngStreams
    ) -> Tuple[np.ndarray, int]:
        admit = ctrl.solve_admission(q, g, v_g)
        sel = ctrl.select_phi(q, models, mode=mode, enum_cap=enum_cap)
        return admit.r, sel.phi_mask

    return _simulate(config, decide)


def run_fixed_policy(
    config: RunConfig,
    policy: PolicyRandRR,
    r_fixed: Sequence[float],
) -> RunMetrics:
    """Run a fixed mixture policy with a constant admission vector."""
    r_fixed = np.asarray(r_fixed, dtype=float)
    if np.any(r_fixed < 0) or np.any(r_fixed > 1):
        raise ValueError("fixed admission rates must lie in [0, 1]")
    if policy.n != config.n:
        raise ValueError("policy dimension does not match the channel set")

    if len(policy.masks) == 1:
        const = (r_fixed, policy.masks[0])

        def decide(
            _q: Sequence[float], _t: int, _rngs: RngStreams
        ) -> Tuple[np.ndarray, int]:
            return const
    else:

        def decide(
            _q: Sequence[float], _t: int, rngs: RngStreams
        ) -> Tuple[np.ndarray, int]:
            return r_fixed, policy.sample(rngs.mix.u())

    return _simulate(config, decide, needs_q=False)


def run_saturated(
    models: Sequence[ChannelModel],
    phi: ActivationVector,
    horizon: int,
    seed: int,
    age_cap: int = DEFAULT_AGE_CAP,
) -> np.ndarray:
    """Per-channel throughput of RR(phi) rounds under saturation.

    With every queue backlogged, delivered equals served (y = mu), so the
    empirical rate is just the fraction of real transmission slots each
    channel gets.  This is the fast path for vertex verification; it runs
    the same round executor as the full engine without queue accounting.
    """
    if phi.mask == 0 or horizon <= 0:
        return np.zeros(len(models))
    rngs = RngStreams(seed)
    params = _ChannelParams(models, age_cap)
    n = len(models)
    obs = [UNOBSERVED] * n
    obs_time = [0] * n
    states = [1 if rngs.channel.u() < params.pi[i] else 0 for i in range(n)]
    true_time = [0] * n
    last_visit = [-1] * n
    delivered = [0] * n
    active = phi.active()
    m_phi = phi.m
    clock = last_visit.__getitem__
    visits: List[Tuple[int, bool, int, int]] = []
    t = 0
    while t < horizon:
        order = sorted(active, key=clock)
        visits.clear()
        t = _execute_round(
            params, order, m_phi, obs, obs_time, states, true_time,
            last_visit, t, rngs, visits,
        )
        for c, real, length, _end_state in visits:
            if real:
                delivered[c] += length - 1
    return np.array(delivered, dtype=float) / t


def stability_diagnostic(
    metrics: RunMetrics,
    threshold: float = STABILITY_SLOPE_THRESHOLD,
) -> "StabilityReport":
    """Least-squares slope of total backlog over the post-warmup window.

    Returns an inconclusive report when the window is shorter than nine
    warmup lengths (horizon < 10x warmup).
    """
    t0 = metrics.warmup_t
    t1 = metrics.t_end
    if t1 - t0 < 2 or metrics.horizon < 10 * metrics.warmup_requested:
        return StabilityReport(stable=None, slope=float("nan"))
    ts = np.arange(t0, t1, dtype=float)
    slope = float(np.polyfit(ts, metrics.backlog[t0:], 1)[0])
    return StabilityReport(stable=bool(slope < threshold), slope=slope)


@dataclass(frozen=True)
class StabilityReport:
    #: True/False, or None when the window is too short to judge
    stable: Optional[bool]
    slope: float
