"""Frame-based controller: per-frame admission control plus queue-
dependent selection of the round robin subset.

Admission maximizes V_g * g(r) - Q @ r separately per user.  Subset
selection maximizes the backlog-weighted expected service per round
divided by the expected round length (a renewal-reward rate); when the
best value is not positive the controller idles for one slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .capacity import (
    ActivationVector,
    DEFAULT_ENUM_CAP,
    all_subsets,
    pair_subsets,
)
from .channel import OFF, ChannelModel, k_step_prob
from .utility import UtilityFunction

MODES = ("exhaustive", "symmetric_fast", "pairs_only")

_GOLDEN_TOL = 1e-9


class NonConcaveUtilityError(ValueError):
    pass


@dataclass(frozen=True)
class AdmissionDecision:
    r: np.ndarray
    h_star: float


@dataclass(frozen=True)
class SelectionDecision:
    #: chosen subset bitmask; 0 means idle for one slot
    phi_mask: int
    #: value of the selection metric at the argmax (0 when idling)
    ratio_value: float

    @property
    def idle(self) -> bool:
        return self.phi_mask == 0


def _admit_one(user_idx, user, q_n: float, v_g: float) -> float:
    """Maximize v_g * g_n(r) - q_n * r over r in [0, 1]."""
    if v_g == 0.0:
        return 0.0  # objective is -q_n * r (or flat); admit nothing
    if q_n <= 0.0:
        return 1.0  # no backlog penalty and g_n nondecreasing
    if user.kind == "log1p":
        # stationarity v_g * w / (1 + r) = q_n, clamped to [0, 1]
        r = v_g * user.weight / q_n - 1.0
        return min(max(r, 0.0), 1.0)
    if user.kind == "linear":
        return 1.0 if v_g * user.weight >= q_n else 0.0

    def f(r: float) -> float:
        return v_g * user.value(r) - q_n * r

    # coarse concavity check before trusting unimodal search
    grid = [f(i / 8.0) for i in range(9)]
    for i in range(1, 8):
        if grid[i] + 1e-9 < (grid[i - 1] + grid[i + 1]) / 2.0:
            raise NonConcaveUtilityError(
                f"utility of user {user_idx} fails the midpoint concavity "
                f"test near r={i / 8.0}"
            )
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > _GOLDEN_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    best = max((f(0.0), 0.0), (f((a + b) / 2.0), (a + b) / 2.0), (f(1.0), 1.0))
    return best[1]


def solve_admission(
    q: Sequence[float],
    g: UtilityFunction,
    v_g: float,
) -> AdmissionDecision:
    """Per-frame admission rates, one decoupled scalar program per user."""
    if v_g < 0:
        raise ValueError(f"V_g must be nonnegative, got {v_g}")
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("backlog vector must be nonnegative")
    r = np.array(
        [_admit_one(i, u, q[i], v_g) for i, u in enumerate(g.users)]
    )
    h_star = v_g * g.value(r) - float(q @ r)
    return AdmissionDecision(r=r, h_star=h_star)


def ratio_metric(
    q: Sequence[float],
    models: Sequence[ChannelModel],
    phi: ActivationVector,
) -> float:
    """Backlog-weighted expected service per expected round length.

    For active channel n the expected served packets in a round are
    E[stay] - 1 = P01^(M) / p10, and the round length is the sum of the
    expected stays.
    """
    if phi.mask == 0:
        raise ValueError("activation vector must be nonzero")
    m = phi.m
    num = 0.0
    den = 0.0
    for n in phi.active():
        served = k_step_prob(models[n], OFF, m) / models[n].p10
        num += q[n] * served
        den += 1.0 + served
    return num / den


def _models_symmetric(models: Sequence[ChannelModel]) -> bool:
    return all(
        m.p01 == models[0].p01 and m.p10 == models[0].p10 for m in models
    )


def select_phi(
    q: Sequence[float],
    models: Sequence[ChannelModel],
    mode: str = "exhaustive",
    enum_cap: int = DEFAULT_ENUM_CAP,
) -> SelectionDecision:
    """Pick the subset maximizing the selection metric, or idle.

    Ties break toward more active channels, then the smallest bitmask.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    q = np.asarray(q, dtype=float)
    n = len(models)

    if mode == "symmetric_fast":
        if not _models_symmetric(models):
            raise ValueError("symmetric_fast mode requires identical matrices")
        return _select_symmetric(q, models[0], n)

    if mode == "exhaustive":
        if n > enum_cap:
            raise ValueError(
                f"N={n} exceeds the enumeration cap ({enum_cap}); "
                f"use pairs_only or symmetric_fast"
            )
        candidates = all_subsets(n)
    else:  # pairs_only: serve two channels or none
        candidates = pair_subsets(n) if n >= 2 else all_subsets(n)

    best: Optional[Tuple[float, int, int]] = None
    best_mask = 0
    for phi in candidates:
        val = ratio_metric(q, models, phi)
        key = (val, phi.m, -phi.mask)
        if best is None or key > best:
            best = key
            best_mask = phi.mask
    if best is None or best[0] <= 0.0:
        return SelectionDecision(phi_mask=0, ratio_value=0.0)
    return SelectionDecision(phi_mask=best_mask, ratio_value=best[0])


def _select_symmetric(
    q: np.ndarray, model: ChannelModel, n: int
) -> SelectionDecision:
    """Polynomial fast path for identical matrices.

    Sort backlogs descending; for each prefix size K the metric is
    P01^(K) / (K * (p10 + P01^(K))) times the prefix backlog sum, so only
    N candidates need evaluating.
    """
    order = sorted(range(n), key=lambda i: (-q[i], i))
    prefix = 0.0
    best_val = 0.0
    best_k = 0
    for k in range(1, n + 1):
        prefix += q[order[k - 1]]
        pk = k_step_prob(model, OFF, k)
        val = pk / (k * (model.p10 + pk)) * prefix
        if val > best_val:
            best_val = val
            best_k = k
    if best_val <= 0.0:
        return SelectionDecision(phi_mask=0, ratio_value=0.0)
    mask = 0
    for i in order[:best_k]:
        mask |= 1 << i
    return SelectionDecision(phi_mask=mask, ratio_value=best_val)


def qrrnum_frame(
    q: Sequence[float],
    models: Sequence[ChannelModel],
    g: UtilityFunction,
    v_g: float,
    mode: str = "exhaustive",
    enum_cap: int = DEFAULT_ENUM_CAP,
) -> Tuple[AdmissionDecision, SelectionDecision]:
    """Both frame decisions on one backlog snapshot.

    The admission rate applies to every slot of the coming frame,
    including an idle frame of length one.
    """
    return (
        solve_admission(q, g, v_g),
        select_phi(q, models, mode=mode, enum_cap=enum_cap),
    )
