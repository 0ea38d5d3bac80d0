"""Tabular MDP primitives: Q-tables, regime models, and value extraction.

State and action spaces are index sets ``0..S-1`` and ``0..A-1``. A regime
("mode") is one stationary MDP slice: a reward table, a transition kernel,
and a frozen per-(s, a) epistemic penalty. All types are immutable after
construction; every operation here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QFunction",
    "ModeModel",
    "OperatorParams",
    "PiecewiseSchedule",
    "KERNEL_ROW_TOL",
    "greedy_value",
    "sup_dist",
    "validate_mode",
    "make_random_mode",
]

# Transition kernel rows must be stochastic to this absolute tolerance;
# contraction certificates rely on it holding at machine precision.
KERNEL_ROW_TOL = 1e-12


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class QFunction:
    """Dense action-value table over (state, action).

    Entries must be finite and the table non-empty; both are checked at
    construction so downstream operators can skip per-call validation.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.values.ndim != 2:
            raise ValueError(f"Q table must be 2-d (S, A), got shape {self.values.shape}")
        s, a = self.values.shape
        if s < 1 or a < 1:
            raise ValueError(f"Q table needs S >= 1 and A >= 1, got shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValueError("Q table contains non-finite entries")

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    @property
    def n_actions(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def zeros(cls, n_states: int, n_actions: int) -> "QFunction":
        return cls(np.zeros((n_states, n_actions)))


@dataclass(frozen=True)
class ModeModel:
    """One regime: reward table, transition kernel, frozen epistemic penalty.

    Shapes are checked at construction; the probabilistic invariants
    (non-negative kernel, stochastic rows, non-negative penalty) are *not*,
    so that deliberately broken models can be built and fed to
    :func:`validate_mode`, which reports every violation.
    """

    reward: np.ndarray      # (S, A), reward units
    kernel: np.ndarray      # (S, A, S'), P(s' | s, a)
    gamma_epi: np.ndarray   # (S, A), >= 0

    def __post_init__(self):
        object.__setattr__(self, "reward", _frozen_array(self.reward))
        object.__setattr__(self, "kernel", _frozen_array(self.kernel))
        object.__setattr__(self, "gamma_epi", _frozen_array(self.gamma_epi))
        if self.reward.ndim != 2:
            raise ValueError(f"reward must be 2-d (S, A), got {self.reward.shape}")
        s, a = self.reward.shape
        if self.kernel.shape != (s, a, s):
            raise ValueError(
                f"kernel shape {self.kernel.shape} does not match reward shape {(s, a, s)}"
            )
        if self.gamma_epi.shape != (s, a):
            raise ValueError(
                f"gamma_epi shape {self.gamma_epi.shape} does not match reward shape {(s, a)}"
            )

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def n_actions(self) -> int:
        return self.reward.shape[1]


@dataclass(frozen=True)
class OperatorParams:
    """Discount and frozen penalty coefficients shared by all regime operators."""

    gamma: float
    lambda_epi: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must satisfy 0 <= gamma < 1, got {self.gamma}")
        if self.lambda_epi < 0.0:
            raise ValueError(f"lambda_epi must be >= 0, got {self.lambda_epi}")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")


@dataclass(frozen=True)
class PiecewiseSchedule:
    """Ordered regime schedule: (mode_index, dwell) segments.

    Mode indices are validated against a mode count only where one is known
    (see the harness config); here we require dwell >= 1 and index >= 0.
    """

    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple((int(m), int(d)) for m, d in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("schedule needs at least one segment")
        for m, d in segs:
            if m < 0:
                raise ValueError(f"mode index must be >= 0, got {m}")
            if d < 1:
                raise ValueError(f"dwell must be >= 1, got {d}")

    @property
    def total_iterations(self) -> int:
        return sum(d for _, d in self.segments)

    @property
    def max_mode_index(self) -> int:
        return max(m for m, _ in self.segments)

    def mode_at(self, t: int) -> int:
        """Active mode index at iteration ``t`` (0-based)."""
        if t < 0:
            raise ValueError(f"iteration must be >= 0, got {t}")
        acc = 0
        for m, d in self.segments:
            acc += d
            if t < acc:
                return m
        raise ValueError(f"iteration {t} beyond schedule end {acc}")

    def switch_times(self) -> list[int]:
        """Iterations at which a new segment begins (excluding t=0)."""
        times, acc = [], 0
        for _, d in self.segments[:-1]:
            acc += d
            times.append(acc)
        return times


def greedy_value(q: QFunction) -> np.ndarray:
    """State values under the greedy policy: V(s) = max_a Q(s, a)."""
    return q.values.max(axis=1)


def sup_dist(q1: QFunction, q2: QFunction) -> float:
    """Sup-norm distance max_{s,a} |Q1 - Q2|."""
    if q1.shape != q2.shape:
        raise ValueError(f"dimension mismatch: {q1.shape} vs {q2.shape}")
    return float(np.max(np.abs(q1.values - q2.values)))


def validate_mode(model: ModeModel) -> list[str]:
    """Check the regime-model invariants, returning one message per violation.

    An empty list means the model is valid: finite tables, kernel entries
    >= 0, every kernel row summing to 1 within ``KERNEL_ROW_TOL``, and a
    non-negative epistemic penalty.
    """
    report: list[str] = []
    if not np.isfinite(model.reward).all():
        for s, a in zip(*np.nonzero(~np.isfinite(model.reward))):
            report.append(f"reward[{s},{a}] is not finite")
    if not np.isfinite(model.kernel).all():
        for s, a, t in zip(*np.nonzero(~np.isfinite(model.kernel))):
            report.append(f"kernel[{s},{a},{t}] is not finite")
        return report  # row sums are meaningless with non-finite entries
    neg = np.nonzero(model.kernel < 0.0)
    for s, a, t in zip(*neg):
        report.append(f"kernel[{s},{a},{t}] = {model.kernel[s, a, t]} is negative")
    row_sums = model.kernel.sum(axis=2)
    bad_rows = np.nonzero(np.abs(row_sums - 1.0) > KERNEL_ROW_TOL)
    for s, a in zip(*bad_rows):
        total = float(row_sums[s, a])
        report.append(
            f"kernel row ({s},{a}) sums to {total:.6g} (deficit {1.0 - total:.6g})"
        )
    neg_pen = np.nonzero(model.gamma_epi < 0.0)
    for s, a in zip(*neg_pen):
        report.append(f"gamma_epi[{s},{a}] = {model.gamma_epi[s, a]} is negative")
    if not np.isfinite(model.gamma_epi).all():
        for s, a in zip(*np.nonzero(~np.isfinite(model.gamma_epi))):
            report.append(f"gamma_epi[{s},{a}] is not finite")
    return report


def make_random_mode(
    seed: int,
    n_states: int,
    n_actions: int,
    reward_range: tuple[float, float] = (-1.0, 1.0),
    penalty_max: float = 0.5,
) -> ModeModel:
    """Draw a valid random regime, deterministic in ``seed``.

    Kernel rows are simplex-uniform (flat Dirichlet) and renormalized
    exactly so row sums hold to machine precision.
    """
    if n_states < 1 or n_actions < 1:
        raise ValueError("need n_states >= 1 and n_actions >= 1")
    lo, hi = reward_range
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError(f"invalid reward range {reward_range}")
    rng = np.random.default_rng(seed)
    reward = rng.uniform(lo, hi, size=(n_states, n_actions))
    kernel = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    kernel = kernel / kernel.sum(axis=2, keepdims=True)
    gamma_epi = rng.uniform(0.0, penalty_max, size=(n_states, n_actions))
    return ModeModel(reward=reward, kernel=kernel, gamma_epi=gamma_epi)
