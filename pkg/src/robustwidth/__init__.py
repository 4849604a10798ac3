"""Sparse recovery by l1 minimization under an lp residual budget, with a
matrix-property toolkit (robust width, restricted isometry, null-space
property), Gaussian-width estimation, and reproducible experiment harnesses.
"""

from .estimator import LpConstrainedBasisPursuit
from .experiments import (
    TrialGrid,
    emit_report,
    estimate_width,
    load_report,
    phase_transition,
    recovery_bound_experiment,
    rwp_probability_experiment,
    width_scaling_experiment,
)
from .geometry import (
    SupportSet,
    best_s_term,
    gaussian_tail,
    lp_norm,
    project_l1_ball,
    project_l2_ball,
    project_linf_ball,
    project_lp_ball,
    sigma_s_l1,
    soft_threshold,
    support_function_capped_l1,
)
from .properties import (
    NspVerdict,
    RwpSearchConfig,
    RwpVerdict,
    SmallBallParams,
    SphereSearchConfig,
    TailSplitReport,
    nsp_falsify,
    nsp_to_rwp,
    recovery_to_rwp_constants,
    rip_estimate,
    rip_to_rwp,
    rwp_search,
    rwp_to_recovery_constants,
    small_ball_lower_bound,
    small_ball_probability_exponent,
    small_ball_rwp_alpha,
    tail_split_check,
    traditional_to_general_nsp,
)
from .sensing import RngStream, apply_matrix, gen_gaussian_matrix, gen_noise, gen_sparse_signal
from .solver import (
    InfeasibleProblemError,
    SolverConfig,
    decode,
    decode_identity_closed_form,
    residual_lp,
)
from .types import (
    CsSpaceSparse,
    ExperimentReport,
    NspConstants,
    RecoveryConstants,
    RecoveryProblem,
    RecoveryResult,
    RipEstimate,
    RwpParams,
    SenseMatrix,
    Signal,
    WidthEstimate,
)

__version__ = "0.1.0"
