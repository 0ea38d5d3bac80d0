"""Scripted piecewise value-iteration experiments.

One experiment iterates a frozen-belief mixture backup through a scripted
regime schedule while the change-detection and adaptive-conservatism
chain runs alongside:

  1. the true regime follows the schedule;
  2. a fused surprise is computed from three tabular channels (rollout
     reward z-score, noisy-ensemble Q-std ratio, penalty-trace drift);
  3. the run-length posterior absorbs the surprise;
  4. the penalty lambda_w and the LCB coefficient beta_eff are refreshed;
  5. one frozen-belief backup is applied (optionally aggregated and/or
     noisy), using the belief and penalty snapshots taken before the
     application;
  6. the sup-norm error to the *true* active regime's fixed point is
     recorded.

The backup's regime estimate trails the schedule by the analytic
detection delay: during the detection window the iterate keeps updating
with the stale operator (policy "stale") or holds still (policy "hold").
Error rows are phase-labeled detection / contraction / steady; the labels
are reporting conveniences, the certified quantities are the envelopes.

Identical config and seed produce bit-identical traces: every random
stream is derived from (seed, stream id, iteration [, member]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..adaptive import (
    SurpriseInputs,
    beta_eff,
    ema_update,
    lambda_w,
    surprise,
    update_surprise_ema,
)
from ..bocd import (
    ClusterState,
    JointBelief,
    RunLengthBelief,
    belief_entropy,
    bocd_step,
    cluster_assign,
    expected_run_length,
    joint_step,
)
from ..mdp import QFunction, sup_dist
from ..operators import (
    ModeBelief,
    apply_mixture_operator,
    error_floor,
    mode_fixed_point,
    project,
    projection_error,
)
from .config import ExperimentConfig

__all__ = ["TraceRow", "ExperimentTrace", "run_piecewise", "TRACE_FIELDS"]

TRACE_FIELDS = (
    "iter",
    "true_mode",
    "xi",
    "h_bar",
    "entropy",
    "lambda_w",
    "beta_eff",
    "err",
    "phase",
)

PHASES = ("detection", "contraction", "steady")

# Steady-state labeling: within 10% of the analytic floor (with a tiny
# absolute fallback when the floor is zero). A label, not a theorem.
STEADY_MARGIN = 1.1
STEADY_ABS = 1e-9

_ROLLOUT_STREAM = 0
_ENSEMBLE_STREAM = 1
_NOISE_STREAM = 2
_TINY = 1e-8

# The per-iteration ensemble-spread estimate is itself a noisy statistic
# (std over n_ensemble tables); a short EMA steadies its ratio channel
# without hiding genuine jumps.
_SIGMA_Q_SMOOTH = 0.5


@dataclass(frozen=True)
class TraceRow:
    iter: int
    true_mode: int
    xi: float
    h_bar: float
    entropy: float
    lambda_w: float
    beta_eff: float
    err: float
    phase: str

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValueError(f"phase must be one of {PHASES}, got {self.phase!r}")


@dataclass(frozen=True)
class ExperimentTrace:
    """Iteration-contiguous sequence of per-step records."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        for i, row in enumerate(rows):
            if row.iter != i:
                raise ValueError(f"trace rows must be iteration-contiguous; row {i} has iter {row.iter}")

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        return [getattr(row, name) for row in self.rows]


def _greedy_rollout(model, q: QFunction, length: int, rng) -> np.ndarray:
    """One-step rewards along a greedy trajectory through the true regime.

    Starts from state 0 every iteration so batch-to-batch reward variation
    reflects the regime (and kernel sampling), not start-state dispersion.
    """
    rewards = np.empty(length)
    n_states = model.n_states
    state = 0
    greedy = np.argmax(q.values, axis=1)
    for i in range(length):
        action = int(greedy[state])
        rewards[i] = model.reward[state, action]
        state = int(rng.choice(n_states, p=model.kernel[state, action]))
    return rewards


def _estimated_mode(schedule, t: int, detection_steps: int) -> int:
    """Active mode as seen by the detector: lags each switch by detection_steps."""
    lagged = t - detection_steps
    if lagged < 0:
        return schedule.mode_at(0)
    return schedule.mode_at(lagged)


def run_piecewise(config: ExperimentConfig) -> ExperimentTrace:
    """Run the scripted experiment and return its trace."""
    models = config.models
    params = config.operator_params
    schedule = config.schedule
    seed = config.seed
    n_delta = config.detection_steps

    fixed_points = [mode_fixed_point(m, params, tol=1e-10) for m in models]
    for i, fp in enumerate(fixed_points):
        if not fp.converged:
            raise RuntimeError(f"fixed-point iteration for mode {i} did not converge")
    q_stars = [fp.q_star for fp in fixed_points]
    if config.partition is not None:
        eps_proj = [projection_error(q, config.partition) for q in q_stars]
    else:
        eps_proj = [0.0 for _ in q_stars]
    floors = [error_floor(e, config.noise_sigma, params.gamma) for e in eps_proj]

    switch_times = schedule.switch_times()

    h_max = config.bocd_params.h_max
    if config.joint is not None:
        joint = JointBelief.uniform(h_max, config.joint.n_clusters)
        clusters = ClusterState.empty(config.joint.n_clusters, 3)
    else:
        belief = RunLengthBelief.uniform(h_max)
    adaptive_state = config.adaptive_template

    q = QFunction.zeros(config.n_states, config.n_actions)
    ensemble = [QFunction.zeros(config.n_states, config.n_actions) for _ in range(config.n_ensemble)]

    reward_mean = 0.0
    reward_var = 0.0
    sigma_q_smooth = 0.0
    sigma_q_baseline = 0.0
    kappa_ema = 0.0

    rows = []
    for t in range(schedule.total_iterations):
        true_mode = schedule.mode_at(t)
        est_mode = _estimated_mode(schedule, t, n_delta)
        est_belief = ModeBelief.point_mass(est_mode, len(models))

        # --- surprise channels (all measured before the backup) ---
        roll_rng = np.random.default_rng((seed, _ROLLOUT_STREAM, t))
        rewards = _greedy_rollout(models[true_mode], q, config.rollout_len, roll_rng)
        batch_mean = float(rewards.mean())
        batch_var = float(rewards.var())
        if t == 0:
            reward_mean, reward_var = batch_mean, batch_var
            reward_z = 0.0
        else:
            reward_z = (batch_mean - reward_mean) / (np.sqrt(reward_var) + _TINY)
        reward_mean = ema_update(reward_mean, batch_mean, config.stat_ema_rate)
        reward_var = ema_update(reward_var, batch_var, config.stat_ema_rate)

        new_ensemble = []
        for k, member in enumerate(ensemble):
            backed = apply_mixture_operator(models, est_belief, params, member)
            noise_rng = np.random.default_rng((seed, _ENSEMBLE_STREAM, t, k))
            noise = noise_rng.uniform(-config.ensemble_sigma, config.ensemble_sigma, backed.shape)
            new_ensemble.append(QFunction(backed.values + noise))
        ensemble = new_ensemble
        stack = np.stack([m.values for m in ensemble])
        sigma_q = float(stack.std(axis=0).mean())
        if t == 0:
            sigma_q_smooth = sigma_q
            sigma_q_baseline = sigma_q
            q_std_ratio = 1.0
        else:
            sigma_q_smooth = ema_update(sigma_q_smooth, sigma_q, _SIGMA_Q_SMOOTH)
            q_std_ratio = sigma_q_smooth / (sigma_q_baseline + _TINY)
        sigma_q_baseline = ema_update(sigma_q_baseline, sigma_q_smooth, config.stat_ema_rate)

        td_scale = sup_dist(apply_mixture_operator(models, est_belief, params, q), q)
        kappa_t = params.kappa + td_scale
        if t == 0:
            kappa_ema = kappa_t
            kappa_div = 0.0
        else:
            kappa_div = abs(kappa_t - kappa_ema)
        kappa_ema = ema_update(kappa_ema, kappa_t, config.stat_ema_rate)

        xi = surprise(
            SurpriseInputs(reward_z=reward_z, q_std_ratio=q_std_ratio, kappa_div=kappa_div),
            config.surprise_weights,
        )
        if config.smooth_surprise:
            xi, adaptive_state = update_surprise_ema(adaptive_state, xi)

        # --- belief update, then penalty chain (snapshots for this backup) ---
        if config.joint is not None:
            signal = np.array([reward_z, q_std_ratio, kappa_div])
            z_now, clusters = cluster_assign(signal, clusters)
            joint = joint_step(joint, xi, z_now, config.bocd_params, config.joint.stickiness)
            marginal = RunLengthBelief(joint.run_length_marginal())
            h_bar = expected_run_length(marginal)
            entropy = belief_entropy(marginal)
        else:
            belief = bocd_step(belief, xi, config.bocd_params)
            h_bar = expected_run_length(belief)
            entropy = belief_entropy(belief)
        lam, adaptive_state = lambda_w(h_bar, h_max, adaptive_state)
        beta = beta_eff(adaptive_state, lam)

        # --- one frozen-belief backup ---
        in_detection = any(st <= t < st + n_delta for st in switch_times)
        if not (config.detection_policy == "hold" and in_detection):
            q_new = apply_mixture_operator(models, est_belief, params, q)
            if config.partition is not None:
                q_new = project(q_new, config.partition)
            if config.noise_sigma > 0.0:
                noise_rng = np.random.default_rng((seed, _NOISE_STREAM, t))
                noise = noise_rng.uniform(-config.noise_sigma, config.noise_sigma, q_new.shape)
                q_new = QFunction(q_new.values + noise)
            q = q_new

        err = sup_dist(q, q_stars[true_mode])
        steady_threshold = max(floors[true_mode] * STEADY_MARGIN, STEADY_ABS)
        if in_detection:
            phase = "detection"
        elif err <= steady_threshold:
            phase = "steady"
        else:
            phase = "contraction"

        rows.append(
            TraceRow(
                iter=t,
                true_mode=true_mode,
                xi=float(xi),
                h_bar=float(h_bar),
                entropy=float(entropy),
                lambda_w=float(lam),
                beta_eff=float(beta),
                err=float(err),
                phase=phase,
            )
        )
    return ExperimentTrace(tuple(rows))
