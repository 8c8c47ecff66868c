"""Utility-optimal scheduling over partially observable Markov ON/OFF
channels: achievable throughput region, queue-dependent round robin
controller, and Monte Carlo verification tooling.
"""

from .channel import (
    DEFAULT_AGE_CAP,
    OFF,
    ON,
    UNOBSERVED,
    BeliefState,
    ChannelModel,
    TrueChannelState,
    advance_true_state,
    k_step_prob,
    update_belief,
)
from .capacity import (
    ActivationVector,
    DEFAULT_ENUM_CAP,
    InnerRegion,
    MembershipResult,
    RoundLengthLaw,
    all_subsets,
    b_constant,
    boundary_probe,
    build_region,
    c_coefficient,
    eta_vector,
    pair_subsets,
    region_membership,
    round_length_law,
    solve_offline_optimum,
)
from .config import ConfigError, ExperimentSpec, load_spec, spec_from_dict
from .controller import (
    AdmissionDecision,
    MODES,
    NonConcaveUtilityError,
    SelectionDecision,
    qrrnum_frame,
    ratio_metric,
    select_phi,
    solve_admission,
)
from .policy import (
    FeasibilityError,
    PolicyRandRR,
    RoundResult,
    RoundTrace,
    Visit,
    lru_order,
    run_randrr_frame,
    run_rr_round,
)
from .rngs import RngStreams
from .sim import (
    RunConfig,
    RunMetrics,
    STABILITY_SLOPE_THRESHOLD,
    StabilityReport,
    run_fixed_policy,
    run_qrrnum,
    run_saturated,
    stability_diagnostic,
)
from .utility import UserUtility, UtilityFunction

__version__ = "0.1.0"

__all__ = [
    "ActivationVector",
    "AdmissionDecision",
    "BeliefState",
    "ChannelModel",
    "ConfigError",
    "DEFAULT_AGE_CAP",
    "DEFAULT_ENUM_CAP",
    "ExperimentSpec",
    "FeasibilityError",
    "InnerRegion",
    "MODES",
    "MembershipResult",
    "NonConcaveUtilityError",
    "OFF",
    "ON",
    "PolicyRandRR",
    "RngStreams",
    "RoundLengthLaw",
    "RoundResult",
    "RoundTrace",
    "RunConfig",
    "RunMetrics",
    "STABILITY_SLOPE_THRESHOLD",
    "SelectionDecision",
    "StabilityReport",
    "TrueChannelState",
    "UNOBSERVED",
    "UserUtility",
    "UtilityFunction",
    "Visit",
    "advance_true_state",
    "all_subsets",
    "b_constant",
    "boundary_probe",
    "build_region",
    "c_coefficient",
    "eta_vector",
    "k_step_prob",
    "load_spec",
    "spec_from_dict",
    "lru_order",
    "pair_subsets",
    "qrrnum_frame",
    "ratio_metric",
    "region_membership",
    "round_length_law",
    "run_fixed_policy",
    "run_qrrnum",
    "run_randrr_frame",
    "run_rr_round",
    "run_saturated",
    "select_phi",
    "solve_admission",
    "solve_offline_optimum",
    "stability_diagnostic",
    "update_belief",
]
