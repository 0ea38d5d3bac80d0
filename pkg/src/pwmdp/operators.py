"""Operator zoo for piecewise-robust value iteration.

Contains the per-regime penalized Bellman backup, its belief-weighted
mixture, the scalar value-coupled counterexample operator with its sharp
contraction threshold, block-averaging state aggregation, bounded-noise
wrappers, fixed-point iteration with a-posteriori certificates, empirical
Lipschitz estimation, and the regime-switch perturbation bound.

Everything operates on immutable inputs and returns fresh objects; the
only randomness is owned by explicit seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .mdp import ModeModel, OperatorParams, QFunction, greedy_value, sup_dist

__all__ = [
    "ModeBelief",
    "CoupledOperatorParams",
    "StatePartition",
    "FixedPointResult",
    "RegimePerturbation",
    "apply_mode_operator",
    "mixture_backup",
    "apply_mixture_operator",
    "apply_coupled_operator",
    "coupled_operator_factor",
    "classify_factor",
    "solve_fixed_point",
    "mode_fixed_point",
    "estimate_lipschitz",
    "regime_perturbation",
    "project",
    "projection_error",
    "apply_noisy_operator",
    "shared_critic_from_modes",
    "extract_mode",
    "apply_mixture_via_shared",
    "belief_gap",
    "error_floor",
    "switch_error_bound",
]

BELIEF_SUM_TOL = 1e-12

QOperator = Callable[[QFunction], QFunction]


@dataclass(frozen=True)
class ModeBelief:
    """Probability weights over regimes; validated to the simplex at construction."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size < 1:
            raise ValueError(f"belief must be a non-empty vector, got shape {w.shape}")
        if not np.isfinite(w).all():
            raise ValueError("belief contains non-finite weights")
        if (w < 0.0).any():
            raise ValueError("belief weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > BELIEF_SUM_TOL:
            raise ValueError(f"belief weights sum to {w.sum()!r}, expected 1")

    @classmethod
    def point_mass(cls, index: int, n_modes: int) -> "ModeBelief":
        w = np.zeros(n_modes)
        w[index] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, n_modes: int) -> "ModeBelief":
        return cls(np.full(n_modes, 1.0 / n_modes))


@dataclass(frozen=True)
class CoupledOperatorParams:
    """Scalar operator obtained when the regime belief is allowed to track Q.

    With belief weight ``sensitivity * q`` on the high-reward regime, the
    one-state backup collapses to the affine map
    ``q -> (gamma + sensitivity * (r_high - r_low)) * q + r_low``, whose
    Lipschitz factor exceeds the discount by ``sensitivity * reward_gap``.
    ``reward_gap >= 0`` is required (the regime the threshold analysis covers).
    """

    gamma: float
    sensitivity: float
    r_high: float
    r_low: float

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.sensitivity < 0.0:
            raise ValueError(f"sensitivity must be >= 0, got {self.sensitivity}")
        if self.reward_gap < 0.0:
            raise ValueError(
                f"reward gap r_high - r_low must be >= 0, got {self.reward_gap}"
            )

    @property
    def reward_gap(self) -> float:
        return self.r_high - self.r_low


@dataclass(frozen=True)
class StatePartition:
    """Disjoint state blocks covering 0..n_states-1 (aggregation structure)."""

    n_states: int
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(int(s) for s in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        seen: set[int] = set()
        for b in blocks:
            if not b:
                raise ValueError("empty block in partition")
            for s in b:
                if not 0 <= s < self.n_states:
                    raise ValueError(f"state {s} outside 0..{self.n_states - 1}")
                if s in seen:
                    raise ValueError(f"state {s} appears in more than one block")
                seen.add(s)
        if len(seen) != self.n_states:
            missing = sorted(set(range(self.n_states)) - seen)
            raise ValueError(f"partition does not cover states {missing}")

    @classmethod
    def singletons(cls, n_states: int) -> "StatePartition":
        return cls(n_states, tuple((s,) for s in range(n_states)))


@dataclass(frozen=True)
class FixedPointResult:
    q_star: QFunction
    iterations: int
    final_residual: float
    converged: bool


class RegimePerturbation(NamedTuple):
    delta_r: float      # sup-norm operator difference at the old fixed point
    bound: float        # delta_r / (1 - gamma)
    actual_gap: float   # sup-norm distance between the two fixed points


def apply_mode_operator(model: ModeModel, params: OperatorParams, q: QFunction) -> QFunction:
    """Penalized Bellman backup under one regime.

    out(s,a) = R(s,a) + gamma * (sum_s' P(s'|s,a) V(s') - lambda_epi * G(s,a) - kappa)
    with V(s') = max_a' Q(s',a'). Penalties are frozen tables, so they cancel
    in differences and the map contracts at rate gamma.
    """
    if model.reward.shape != q.shape:
        raise ValueError(f"dimension mismatch: model {model.reward.shape} vs Q {q.shape}")
    v = greedy_value(q)
    backup = model.kernel @ v - params.lambda_epi * model.gamma_epi - params.kappa
    return QFunction(model.reward + params.gamma * backup)


def mixture_backup(
    models: Sequence[ModeModel],
    weights: np.ndarray,
    params: OperatorParams,
    q: QFunction,
) -> QFunction:
    """Weighted sum of per-regime backups with the weights taken as-is.

    No simplex validation: callers that need the contraction guarantee must
    pass a proper belief (see :func:`apply_mixture_operator`). Exposed so
    that the discounting identity's failure under unnormalized weights can
    be demonstrated directly.
    """
    weights = np.asarray(weights, dtype=float)
    if len(models) != weights.size:
        raise ValueError(f"{len(models)} models but {weights.size} weights")
    if not models:
        raise ValueError("need at least one model")
    out = np.zeros(q.shape)
    for w, model in zip(weights, models):
        out += w * apply_mode_operator(model, params, q).values
    return QFunction(out)


def apply_mixture_operator(
    models: Sequence[ModeModel],
    belief: ModeBelief | np.ndarray,
    params: OperatorParams,
    q: QFunction,
) -> QFunction:
    """Belief-weighted mixture of per-regime backups (frozen belief).

    With a point-mass belief this reduces exactly to
    :func:`apply_mode_operator` on the selected regime; a single-regime
    mixture is the plain penalized backup. A convex combination of
    gamma-contractions contracts at the same rate, which is what the
    certification suite verifies empirically.
    """
    if not isinstance(belief, ModeBelief):
        belief = ModeBelief(np.asarray(belief, dtype=float))
    if len(models) != belief.weights.size:
        raise ValueError(f"{len(models)} models but {belief.weights.size} belief weights")
    return mixture_backup(models, belief.weights, params, q)


def apply_coupled_operator(p: CoupledOperatorParams, q: float) -> float:
    """One step of the value-coupled scalar operator."""
    return (p.gamma + p.sensitivity * p.reward_gap) * q + p.r_low


def coupled_operator_factor(p: CoupledOperatorParams) -> float:
    """Exact Lipschitz factor gamma + sensitivity * reward_gap."""
    return p.gamma + p.sensitivity * p.reward_gap


def classify_factor(factor: float, tol: float = 0.0) -> str:
    """Trichotomy for a Lipschitz factor: contraction / nonexpansive / expansion.

    ``tol`` widens the nonexpansive band for measured factors.
    """
    if factor < 1.0 - tol:
        return "contraction"
    if factor > 1.0 + tol:
        return "expansion"
    return "nonexpansive"


def solve_fixed_point(
    operator: QOperator,
    q0: QFunction,
    tol: float = 1e-10,
    max_iter: int = 10**6,
    divergence_cap: float = 1e12,
) -> FixedPointResult:
    """Iterate Q <- T(Q) until the sup-norm update drops below ``tol``.

    For a certified gamma-contraction the a-posteriori bound gives
    dist(Q, Q*) <= tol * gamma / (1 - gamma) on return. Non-convergence
    within ``max_iter`` (or residual blow-up past ``divergence_cap``,
    expected for expansive maps) is flagged rather than raised.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    q = q0
    residual = float("inf")
    for it in range(1, max_iter + 1):
        q_next = operator(q)
        residual = sup_dist(q_next, q)
        q = q_next
        if residual < tol:
            return FixedPointResult(q, it, residual, True)
        if not np.isfinite(residual) or residual > divergence_cap:
            return FixedPointResult(q, it, residual, False)
    return FixedPointResult(q, max_iter, residual, False)


def mode_fixed_point(
    model: ModeModel, params: OperatorParams, tol: float = 1e-10, max_iter: int = 10**6
) -> FixedPointResult:
    """Fixed point of one regime's backup, iterated from the zero table."""
    q0 = QFunction.zeros(model.n_states, model.n_actions)
    return solve_fixed_point(lambda q: apply_mode_operator(model, params, q), q0, tol, max_iter)


def estimate_lipschitz(
    operator: QOperator,
    dims: tuple[int, int],
    n_pairs: int,
    seed: int,
    value_range: tuple[float, float] = (-10.0, 10.0),
    include_structured: bool = True,
) -> float:
    """Empirical sup-norm Lipschitz factor over sampled table pairs.

    Takes the max of dist(T Q1, T Q2) / dist(Q1, Q2) over ``n_pairs``
    random pairs (entries uniform in ``value_range``; per-pair RNG streams
    derived from ``(seed, pair_index)``), skipping zero-distance pairs.
    ``include_structured`` adds a uniform-shift pair and single-entry bump
    pairs, which are tight for affine operators where random pairs alone
    understate the factor.
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    s, a = dims
    lo, hi = value_range

    def ratio(q1: QFunction, q2: QFunction) -> float:
        d = sup_dist(q1, q2)
        if d == 0.0:
            return 0.0
        return sup_dist(operator(q1), operator(q2)) / d

    best = 0.0
    for i in range(n_pairs):
        rng = np.random.default_rng((seed, i))
        q1 = QFunction(rng.uniform(lo, hi, size=(s, a)))
        q2 = QFunction(rng.uniform(lo, hi, size=(s, a)))
        best = max(best, ratio(q1, q2))
    if include_structured:
        rng = np.random.default_rng((seed, n_pairs))
        base = rng.uniform(lo, hi, size=(s, a))
        best = max(best, ratio(QFunction(base), QFunction(base + 1.0)))
        for j in range(min(3, s * a)):
            bumped = base.copy()
            bumped[j // a, j % a] += 1.0
            best = max(best, ratio(QFunction(base), QFunction(bumped)))
    return best


def regime_perturbation(
    model_k: ModeModel,
    model_k1: ModeModel,
    params: OperatorParams,
    tol: float = 1e-10,
) -> RegimePerturbation:
    """Fixed-point shift across a regime switch and its analytic bound.

    delta_r is the pointwise operator difference evaluated at the old fixed
    point; the gap between the two fixed points can never exceed
    delta_r / (1 - gamma), up to the solver tolerance.
    """
    if model_k.reward.shape != model_k1.reward.shape:
        raise ValueError("regime models must share dimensions")
    fp_k = mode_fixed_point(model_k, params, tol)
    fp_k1 = mode_fixed_point(model_k1, params, tol)
    if not (fp_k.converged and fp_k1.converged):
        raise RuntimeError("fixed-point iteration did not converge for a regime model")
    t_k1_at_old = apply_mode_operator(model_k1, params, fp_k.q_star)
    t_k_at_old = apply_mode_operator(model_k, params, fp_k.q_star)
    delta_r = sup_dist(t_k1_at_old, t_k_at_old)
    bound = delta_r / (1.0 - params.gamma)
    actual_gap = sup_dist(fp_k.q_star, fp_k1.q_star)
    return RegimePerturbation(delta_r, bound, actual_gap)


def project(q: QFunction, partition: StatePartition) -> QFunction:
    """Block-averaging state aggregation; idempotent, sup-norm non-expansive."""
    if partition.n_states != q.n_states:
        raise ValueError(
            f"partition over {partition.n_states} states but Q has {q.n_states}"
        )
    out = np.empty_like(q.values)
    for block in partition.blocks:
        idx = list(block)
        out[idx, :] = q.values[idx, :].mean(axis=0)
    return QFunction(out)


def projection_error(q_star: QFunction, partition: StatePartition) -> float:
    """Aggregation error at a fixed point: sup_dist(project(Q*), Q*)."""
    return sup_dist(project(q_star, partition), q_star)


def apply_noisy_operator(
    operator: QOperator, sigma: float, rng_seed, q: QFunction
) -> QFunction:
    """T(Q) plus entrywise uniform noise hard-bounded by sigma.

    Bounded (not Gaussian) noise matches the per-step hypothesis of the
    stochastic tracking bound. Deterministic per seed.
    """
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    out = operator(q)
    if sigma == 0.0:
        return out
    rng = np.random.default_rng(rng_seed)
    noise = rng.uniform(-sigma, sigma, size=out.shape)
    return QFunction(out.values + noise)


def shared_critic_from_modes(per_mode: Sequence[QFunction]) -> np.ndarray:
    """Stack per-regime tables into one (mode, state, action) table, exactly."""
    if not per_mode:
        raise ValueError("need at least one per-mode table")
    shape = per_mode[0].shape
    for q in per_mode:
        if q.shape != shape:
            raise ValueError(f"dimension mismatch: {q.shape} vs {shape}")
    return np.stack([q.values for q in per_mode], axis=0)


def extract_mode(shared: np.ndarray, mode: int) -> QFunction:
    """Slice one regime's table back out of a shared (M, S, A) table."""
    if shared.ndim != 3:
        raise ValueError(f"shared table must be 3-d (M, S, A), got {shared.shape}")
    return QFunction(shared[mode])


def apply_mixture_via_shared(
    models: Sequence[ModeModel],
    belief: ModeBelief | np.ndarray,
    params: OperatorParams,
    q: QFunction,
) -> QFunction:
    """Mixture backup routed through a shared (mode, state, action) table.

    Dual path to :func:`apply_mixture_operator`: per-regime backups are
    stored in a shared table first and contracted with the belief weights
    afterwards. The two paths agree to floating-point round-off.
    """
    if not isinstance(belief, ModeBelief):
        belief = ModeBelief(np.asarray(belief, dtype=float))
    if len(models) != belief.weights.size:
        raise ValueError(f"{len(models)} models but {belief.weights.size} belief weights")
    shared = shared_critic_from_modes(
        [apply_mode_operator(m, params, q) for m in models]
    )
    mixed = np.tensordot(belief.weights, shared, axes=1)
    return QFunction(mixed)


def belief_gap(
    models: Sequence[ModeModel],
    belief_a: ModeBelief,
    belief_b: ModeBelief,
    params: OperatorParams,
    tol: float = 1e-10,
) -> float:
    """Sup-norm distance between mixture fixed points under two beliefs.

    Reported as a diagnostic only: how far a stale belief's fixed point sits
    from the one the current belief would produce. No a-priori bound is
    asserted on this quantity.
    """
    s, a = models[0].reward.shape
    q0 = QFunction.zeros(s, a)
    fp_a = solve_fixed_point(lambda q: apply_mixture_operator(models, belief_a, params, q), q0, tol)
    fp_b = solve_fixed_point(lambda q: apply_mixture_operator(models, belief_b, params, q), q0, tol)
    if not (fp_a.converged and fp_b.converged):
        raise RuntimeError("mixture fixed-point iteration did not converge")
    return sup_dist(fp_a.q_star, fp_b.q_star)


def error_floor(eps_proj: float, sigma: float, gamma: float) -> float:
    """Irreducible steady-state error (eps_proj + sigma) / (1 - gamma)."""
    return (eps_proj + sigma) / (1.0 - gamma)


def switch_error_bound(delta_r: float, eps_proj: float, sigma: float, gamma: float) -> float:
    """Worst-case error immediately after a regime switch."""
    return (delta_r + eps_proj + sigma) / (1.0 - gamma)
