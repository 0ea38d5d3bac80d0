"""pwmdp: piecewise-stationary MDP operators, change detection, and certification.

Tabular toolkit for value iteration through regime switches: per-regime
penalized Bellman backups and their frozen-belief mixtures, the
value-coupled counterexample operator with its sharp contraction
threshold, a truncated run-length change detector with joint regime
clustering, the surprise -> penalty -> LCB-coefficient adaptation chain,
mode-embedding representation losses, and an experiment/certification
harness that checks every contraction, threshold, delay, and perturbation
bound numerically.
"""

from .adaptive import (
    AdaptiveState,
    SurpriseInputs,
    SurpriseWeights,
    beta_eff,
    ema_update,
    lambda_w,
    lcb_score,
    surprise,
    trace_snapshot,
    update_surprise_ema,
)
from .bocd import (
    BOCDParams,
    ClusterState,
    DegenerateBeliefError,
    JointBelief,
    RunLengthBelief,
    bayes_update,
    belief_entropy,
    belief_to_json,
    bocd_step,
    cluster_assign,
    detection_delay,
    expected_run_length,
    joint_step,
    likelihood,
    likelihood_vector,
    posterior_ratio,
)
from .context import (
    ContextLossConfig,
    EmbeddingBatch,
    consistency_loss,
    context_loss,
    diversity_loss,
    fit_linear_context,
    normalize_embedding,
)
from .mdp import (
    KERNEL_ROW_TOL,
    ModeModel,
    OperatorParams,
    PiecewiseSchedule,
    QFunction,
    greedy_value,
    make_random_mode,
    sup_dist,
    validate_mode,
)
from .operators import (
    CoupledOperatorParams,
    FixedPointResult,
    ModeBelief,
    RegimePerturbation,
    StatePartition,
    apply_coupled_operator,
    apply_mixture_operator,
    apply_mixture_via_shared,
    apply_mode_operator,
    apply_noisy_operator,
    belief_gap,
    classify_factor,
    coupled_operator_factor,
    error_floor,
    estimate_lipschitz,
    extract_mode,
    mixture_backup,
    mode_fixed_point,
    project,
    projection_error,
    regime_perturbation,
    shared_critic_from_modes,
    solve_fixed_point,
    switch_error_bound,
)

__version__ = "0.1.0"
