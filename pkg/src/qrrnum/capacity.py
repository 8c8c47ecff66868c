"""Achievable throughput region of the randomized round robin policies.

Provides the region's vertex rates, round-length statistics of one round
robin pass, membership/boundary queries on the down-closed convex hull,
and a Frank-Wolfe solver for the offline utility optimum used as the
benchmark oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from ._lp import solve_lp
from .channel import ChannelModel, OFF, k_step_prob

#: Largest N for which all 2^N - 1 subsets are enumerated.
DEFAULT_ENUM_CAP = 16

#: Uniform-slack tolerance separating "boundary" from inside/outside.
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class ActivationVector:
    """Binary subset of channels, stored as a bitmask (bit n = channel n)."""

    mask: int
    n: int

    def __post_init__(self) -> None:
        if self.mask < 0 or self.mask >= (1 << self.n):
            raise ValueError(f"mask {self.mask} out of range for n={self.n}")

    @classmethod
    def from_active(cls, active: Iterable[int], n: int) -> "ActivationVector":
        mask = 0
        for i in active:
            mask |= 1 << i
        return cls(mask=mask, n=n)

    @classmethod
    def from_vector(cls, vec: Sequence[int]) -> "ActivationVector":
        return cls.from_active([i for i, v in enumerate(vec) if v], n=len(vec))

    @property
    def m(self) -> int:
        """Number of active channels."""
        return bin(self.mask).count("1")

    def active(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.mask >> i & 1)

    def vector(self) -> np.ndarray:
        return np.array([(self.mask >> i) & 1 for i in range(self.n)])


def all_subsets(n: int) -> Iterable[ActivationVector]:
    """All nonzero activation vectors, in increasing bitmask order."""
    for mask in range(1, 1 << n):
        yield ActivationVector(mask=mask, n=n)


def pair_subsets(n: int) -> Iterable[ActivationVector]:
    """The N(N-1)/2 two-channel activation vectors."""
    for i in range(n):
        for j in range(i + 1, n):
            yield ActivationVector.from_active((i, j), n)


def eta_vector(models: Sequence[ChannelModel], phi: ActivationVector) -> np.ndarray:
    """Per-channel round robin throughput for the active subset `phi`.

    For active channel n with x_n = p01 + p10 and a_n defined as
    p01 * (1 - (1-x_n)^M) / (x_n * p10), the rate is
    a_n / (M + sum of a over active channels); inactive entries are 0.
    """
    if phi.mask == 0:
        raise ValueError("activation vector must be nonzero")
    m = phi.m
    eta = np.zeros(phi.n)
    a = {}
    for i in phi.active():
        mod = models[i]
        a[i] = mod.p01 * (1.0 - (1.0 - mod.x) ** m) / (mod.x * mod.p10)
    denom = m + sum(a.values())
    for i, ai in a.items():
        eta[i] = ai / denom
    return eta


def c_coefficient(model: ChannelModel, m: int) -> float:
    """Sum throughput of a round robin over m identical channels.

    The per-user rate in the symmetric region is c_m / m.
    """
    if m < 1:
        raise ValueError(f"subset size must be >= 1, got {m}")
    num = model.p01 * (1.0 - (1.0 - model.x) ** m)
    return num / (model.x * model.p10 + num)


@dataclass(frozen=True)
class RoundLengthLaw:
    """Distribution of the per-channel stay and the total round length.

    The stay on active channel n is 1 slot with probability 1 - q_n and
    1 + Geometric(p10_n) slots with probability q_n, where
    q_n = P01^(M) of channel n.  Stays are independent across channels, so
    round-length moments add through variances.
    """

    phi: ActivationVector
    channels: Tuple[int, ...]
    q: np.ndarray
    p10: np.ndarray

    def stay_pmf(self, channel: int, j: int) -> float:
        """P(stay on `channel` is exactly j slots), j >= 1."""
        idx = self.channels.index(channel)
        q, p = self.q[idx], self.p10[idx]
        if j < 1:
            return 0.0
        if j == 1:
            return 1.0 - q
        return q * (1.0 - p) ** (j - 2) * p

    def mean_stay(self, channel: int) -> float:
        idx = self.channels.index(channel)
        return 1.0 + self.q[idx] / self.p10[idx]

    def second_moment_stay(self, channel: int) -> float:
        idx = self.channels.index(channel)
        q, p = self.q[idx], self.p10[idx]
        # stay = 1 + G with G ~ Geometric(p) on the q-branch
        return (1.0 - q) + q * (1.0 + 2.0 / p + (2.0 - p) / p**2)

    @property
    def mean_round(self) -> float:
        return float(np.sum(1.0 + self.q / self.p10))

    @property
    def var_round(self) -> float:
        var = 0.0
        for ch in self.channels:
            m1 = self.mean_stay(ch)
            var += self.second_moment_stay(ch) - m1 * m1
        return var

    @property
    def second_moment_round(self) -> float:
        return self.var_round + self.mean_round**2


def round_length_law(
    models: Sequence[ChannelModel], phi: ActivationVector
) -> RoundLengthLaw:
    if phi.mask == 0:
        raise ValueError("activation vector must be nonzero")
    chans = phi.active()
    m = phi.m
    q = np.array([k_step_prob(models[i], OFF, m) for i in chans])
    p10 = np.array([models[i].p10 for i in chans])
    return RoundLengthLaw(phi=phi, channels=chans, q=q, p10=p10)


def b_constant(models: Sequence[ChannelModel]) -> float:
    """Drift constant N * E[T^2] for the all-channels round robin.

    The all-ones round is stochastically the longest, so its second
    moment bounds every controller frame.
    """
    n = len(models)
    law = round_length_law(models, ActivationVector(mask=(1 << n) - 1, n=n))
    return n * law.second_moment_round


@dataclass(frozen=True)
class InnerRegion:
    """Down-closure of the convex hull of the subset throughput vertices."""

    models: Tuple[ChannelModel, ...]
    masks: Tuple[int, ...]
    vertices: np.ndarray  # shape (len(masks), N)
    pairs_only: bool = False

    @property
    def n(self) -> int:
        return len(self.models)


def build_region(
    models: Sequence[ChannelModel],
    enum_cap: int = DEFAULT_ENUM_CAP,
    pairs_only: bool = False,
) -> InnerRegion:
    n = len(models)
    if pairs_only:
        subsets = list(pair_subsets(n)) if n >= 2 else list(all_subsets(n))
    else:
        if n > enum_cap:
            raise ValueError(
                f"N={n} exceeds the vertex enumeration cap ({enum_cap}); "
                f"use the pair-restricted region instead"
            )
        subsets = list(all_subsets(n))
    verts = np.array([eta_vector(models, phi) for phi in subsets])
    return InnerRegion(
        models=tuple(models),
        masks=tuple(phi.mask for phi in subsets),
        vertices=verts,
        pairs_only=pairs_only,
    )


@dataclass(frozen=True)
class MembershipResult:
    status: str  # 'inside' | 'boundary' | 'outside'
    #: max uniform slack: positive inside, ~0 on the boundary, negative outside
    slack: float
    #: convex weights over the vertices (inside/boundary)
    weights: Optional[np.ndarray] = None
    #: nonnegative separating direction v with v@lam > max_phi v@eta (outside)
    direction: Optional[np.ndarray] = None


def region_membership(
    region: InnerRegion,
    lam: Sequence[float],
    tol: float = BOUNDARY_TOL,
) -> MembershipResult:
    """Classify a nonnegative rate vector against the region.

    Solves max s subject to: some convex combination of the vertices
    dominates lam + s entrywise.  s > tol is inside, |s| <= tol boundary,
    s < -tol outside.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("rate vector must be nonnegative")
    nv = len(region.masks)
    n = region.n
    # variables: [w_1..w_nv, s_plus, s_minus]
    c = np.zeros(nv + 2)
    c[nv] = 1.0
    c[nv + 1] = -1.0
    a_eq = np.zeros((1, nv + 2))
    a_eq[0, :nv] = 1.0
    b_eq = np.array([1.0])
    a_ge = np.zeros((n, nv + 2))
    a_ge[:, :nv] = region.vertices.T
    a_ge[:, nv] = -1.0
    a_ge[:, nv + 1] = 1.0
    res = solve_lp(c, a_eq, b_eq, a_ge, lam)
    s = res.value
    if s > tol:
        return MembershipResult(status="inside", slack=s, weights=res.x[:nv])
    if s >= -tol:
        return MembershipResult(status="boundary", slack=s, weights=res.x[:nv])
    direction = -res.dual_ge
    direction[direction < 0] = 0.0
    return MembershipResult(status="outside", slack=s, direction=direction)


def boundary_probe(region: InnerRegion, v: Sequence[float]) -> np.ndarray:
    """The farthest point of the region along the ray t * v, t >= 0."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("direction must be nonnegative")
    if not np.any(v > 0):
        raise ValueError("direction must be nonzero")
    nv = len(region.masks)
    n = region.n
    # variables: [w_1..w_nv, t]
    c = np.zeros(nv + 1)
    c[nv] = 1.0
    a_eq = np.zeros((1, nv + 1))
    a_eq[0, :nv] = 1.0
    b_eq = np.array([1.0])
    a_ge = np.zeros((n, nv + 1))
    a_ge[:, :nv] = region.vertices.T
    a_ge[:, nv] = -v
    res = solve_lp(c, a_eq, b_eq, a_ge, np.zeros(n))
    return res.value * v


def _linear_oracle(region: InnerRegion, grad: np.ndarray) -> np.ndarray:
    """Maximize grad @ y over the down-closed hull, exactly.

    Negative gradient coordinates contribute nothing on a down-closed set,
    so clip them and scan the vertices (the origin covers the all-negative
    case).
    """
    d = np.maximum(grad, 0.0)
    scores = region.vertices @ d
    best = int(np.argmax(scores))
    if scores[best] <= 0.0:
        return np.zeros(region.n)
    vertex = region.vertices[best].copy()
    vertex[grad < 0] = 0.0
    return vertex


def solve_offline_optimum(
    region: InnerRegion,
    value: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    gap_tol: float = 1e-8,
    max_iter: int = 10_000,
) -> Tuple[np.ndarray, float, float]:
    """Frank-Wolfe maximization of a concave utility over the region.

    Returns (argmax, value, final duality gap).  The result is the better
    of the final iterate and every vertex, so a vertex optimum is exact.
    """
    y = np.zeros(region.n)
    gap = np.inf
    for _ in range(max_iter):
        grad = gradient(y)
        if not np.all(np.isfinite(grad)):
            # damp: retreat halfway toward the origin and retry
            y *= 0.5
            grad = gradient(y)
            if not np.all(np.isfinite(grad)):
                raise FloatingPointError("non-finite utility gradient persists")
        target = _linear_oracle(region, grad)
        direction = target - y
        gap = float(grad @ direction)
        if gap < gap_tol:
            break
        y = y + _golden_step(value, y, direction) * direction
    best_y, best_v = y, value(y)
    for vert in region.vertices:
        v = value(vert)
        if v > best_v:
            best_y, best_v = vert, v
    origin = np.zeros(region.n)
    if value(origin) > best_v:
        best_y, best_v = origin, value(origin)
    return np.asarray(best_y, dtype=float), float(best_v), gap


def _golden_step(
    value: Callable[[np.ndarray], float],
    y: np.ndarray,
    direction: np.ndarray,
    tol: float = 1e-12,
) -> float:
    """Exact line search for the step size on [0, 1] (concave objective)."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = value(y + c * direction)
    fd = value(y + d * direction)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = value(y + c * direction)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = value(y + d * direction)
    # endpoints matter when the optimum sits at 0 or 1
    candidates = [(value(y + t * direction), t) for t in (0.0, (a + b) / 2.0, 1.0)]
    return max(candidates)[1]
