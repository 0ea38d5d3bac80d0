"""Mode-aware context embeddings: consistency/diversity losses and a linear fitter.

The representation objective pulls same-regime embeddings together (mean
per-regime standard deviation) and pushes regime means apart (negative
log-determinant of an RBF kernel over the means, a determinantal-point-
process style diversity term). A deliberately minimal linear encoder
fitted by finite-difference gradient descent demonstrates that the
objective separates regimes on labeled synthetic data; it is a probe of
the loss behavior, not a performance model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "EmbeddingBatch",
    "ContextLossConfig",
    "ContextLoss",
    "normalize_embedding",
    "consistency_loss",
    "diversity_loss",
    "context_loss",
    "fit_linear_context",
]


def normalize_embedding(v: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Soft L2 normalization v / (||v|| + eps).

    The output norm is ||v|| / (||v|| + eps): essentially unit for
    ||v|| >> eps, and the zero vector maps to the zero vector (accepted
    degenerate output).
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    v = np.asarray(v, dtype=float)
    if not np.isfinite(v).all():
        raise ValueError("embedding contains non-finite entries")
    norm = float(np.linalg.norm(v))
    return v / (norm + eps)


@dataclass(frozen=True)
class ContextLossConfig:
    """Loss weights and kernel parameters.

    w_cons / w_div weight the consistency and diversity terms; r_rbf is the
    kernel bandwidth; eps doubles as the variance floor inside the
    consistency term and the diagonal jitter that keeps the kernel matrix
    positive definite. per_dimension switches the consistency term to the
    per-dimension-sqrt-then-mean convention (default sums per-dimension
    variances before the square root).
    """

    w_cons: float = 50.0
    w_div: float = 0.025
    r_rbf: float = 2.0
    eps: float = 1e-6
    d_e: int = 2
    per_dimension: bool = False

    def __post_init__(self):
        if self.w_cons < 0.0 or self.w_div < 0.0:
            raise ValueError("loss weights must be >= 0")
        if self.r_rbf <= 0.0:
            raise ValueError(f"r_rbf must be > 0, got {self.r_rbf}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.d_e < 1:
            raise ValueError(f"d_e must be >= 1, got {self.d_e}")


@dataclass(frozen=True)
class EmbeddingBatch:
    """Embedding vectors with their regime labels.

    Vectors are expected to come out of :func:`normalize_embedding`; only
    shape and finiteness are enforced here so partially trained encoders
    (whose outputs sit inside the unit ball) can still be scored.
    """

    vectors: np.ndarray   # (n_samples, d_e)
    mode_ids: np.ndarray  # (n_samples,) int

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        m = np.array(self.mode_ids, dtype=int)
        v.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "mode_ids", m)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError(f"vectors must be (n_samples, d_e), got {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("vectors contain non-finite entries")
        if m.shape != (v.shape[0],):
            raise ValueError(f"mode_ids shape {m.shape} does not match {v.shape[0]} samples")

    def modes(self) -> np.ndarray:
        return np.unique(self.mode_ids)

    def mode_means(self) -> np.ndarray:
        """Per-regime mean embeddings, ordered by ascending mode id."""
        return np.stack([self.vectors[self.mode_ids == m].mean(axis=0) for m in self.modes()])


class ContextLoss(NamedTuple):
    total: float
    consistency: float
    diversity: float


def consistency_loss(
    batch: EmbeddingBatch, eps: float = 1e-6, per_dimension: bool = False
) -> float:
    """Mean per-regime embedding spread.

    Default convention: per-dimension variances are summed before the
    square root, so identical embeddings in every group give exactly
    sqrt(eps). With ``per_dimension=True`` each dimension gets its own
    sqrt(var + eps) and the results are averaged. Every regime needs at
    least two samples.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    terms = []
    for m in batch.modes():
        group = batch.vectors[batch.mode_ids == m]
        if group.shape[0] < 2:
            raise ValueError(f"mode {m} has {group.shape[0]} sample(s); need >= 2")
        var = group.var(axis=0)  # population variance per dimension
        if per_dimension:
            terms.append(float(np.mean(np.sqrt(var + eps))))
        else:
            terms.append(float(np.sqrt(var.sum() + eps)))
    return float(np.mean(terms))


def diversity_loss(mode_means: np.ndarray, r_rbf: float = 2.0, eps: float = 1e-6) -> float:
    """Negative log-determinant of the RBF kernel over regime means.

    K_ij = exp(-r_rbf * ||m_i - m_j||^2) + eps * 1[i == j]; the jitter keeps
    K positive definite, so the determinant is positive and the loss finite.
    Computed through a Cholesky factorization (twice the log-diagonal sum).
    Smaller values mean better-separated means.
    """
    mode_means = np.asarray(mode_means, dtype=float)
    if mode_means.ndim != 2 or mode_means.shape[0] < 1:
        raise ValueError(f"mode_means must be (M, d_e) with M >= 1, got {mode_means.shape}")
    if not np.isfinite(mode_means).all():
        raise ValueError("mode_means contain non-finite entries")
    if r_rbf <= 0.0 or eps <= 0.0:
        raise ValueError("r_rbf and eps must be > 0")
    diff = mode_means[:, None, :] - mode_means[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    kernel = np.exp(-r_rbf * sq) + eps * np.eye(mode_means.shape[0])
    chol = np.linalg.cholesky(kernel)
    log_det = 2.0 * float(np.log(np.diag(chol)).sum())
    return -log_det


def context_loss(batch: EmbeddingBatch, config: ContextLossConfig) -> ContextLoss:
    """Weighted combination of consistency and diversity over a batch."""
    l_cons = consistency_loss(batch, eps=config.eps, per_dimension=config.per_dimension)
    l_div = diversity_loss(batch.mode_means(), r_rbf=config.r_rbf, eps=config.eps)
    total = config.w_cons * l_cons + config.w_div * l_div
    return ContextLoss(total, l_cons, l_div)


def _encode(weights: np.ndarray, states: np.ndarray, eps: float) -> np.ndarray:
    raw = states @ weights.T
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    return raw / (norms + eps)


def fit_linear_context(
    data: tuple[np.ndarray, np.ndarray],
    config: ContextLossConfig,
    steps: int = 200,
    lr: float = 0.1,
    seed: int = 0,
    fd_step: float = 1e-5,
) -> np.ndarray:
    """Fit a linear state->embedding map by minimizing the context loss.

    Plain gradient descent with central finite-difference gradients
    (step ``fd_step``) on the weight matrix (d_e, state_dim). Returns the
    weights with the lowest loss observed anywhere along the descent, so
    the result is never worse than the initialization. Deterministic given
    ``seed``. Raises if the loss goes non-finite.
    """
    states, mode_ids = data
    states = np.asarray(states, dtype=float)
    mode_ids = np.asarray(mode_ids, dtype=int)
    if states.ndim != 2 or states.shape[0] != mode_ids.shape[0]:
        raise ValueError("data must be (states (n, d_s), mode_ids (n,)) with matching n")
    labels, counts = np.unique(mode_ids, return_counts=True)
    if labels.size < 2:
        raise ValueError(f"need >= 2 modes, got {labels.size}")
    if (counts < 2).any():
        small = labels[counts < 2]
        raise ValueError(f"every mode needs >= 2 samples; modes {small.tolist()} are short")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")

    norm_eps = 1e-8

    def loss_of(w: np.ndarray) -> float:
        batch = EmbeddingBatch(_encode(w, states, norm_eps), mode_ids)
        value = context_loss(batch, config).total
        if not np.isfinite(value):
            raise FloatingPointError(
                f"context loss became non-finite during descent (weights max "
                f"{np.abs(w).max():g})"
            )
        return value

    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, 1.0, size=(config.d_e, states.shape[1]))
    best_w, best_loss = weights.copy(), loss_of(weights)
    for _ in range(steps):
        grad = np.empty_like(weights)
        for i in range(weights.shape[0]):
            for j in range(weights.shape[1]):
                w_plus = weights.copy()
                w_minus = weights.copy()
                w_plus[i, j] += fd_step
                w_minus[i, j] -= fd_step
                grad[i, j] = (loss_of(w_plus) - loss_of(w_minus)) / (2.0 * fd_step)
        weights = weights - lr * grad
        value = loss_of(weights)
        if value < best_loss:
            best_w, best_loss = weights.copy(), value
    return best_w
