"""Surprise fusion and the adaptive-conservatism chain.

A scalar surprise fuses three normalized anomaly channels (reward z-score,
ensemble Q-std ratio, penalty-trace divergence) and is clipped for
stability. The detector's expected run-length, normalized and baselined
against its own EMA, yields a non-negative penalty ``lambda_w`` that is
zero during stable operation and spikes after detected changes. The
penalty lowers the LCB coefficient ``beta_eff = beta_base - lambda_w *
c_penalty``, so surprise can only make action scoring more conservative,
never less.

EMA convention throughout: ``rate`` is the *retention* of the previous
value (rate 0.95 retains heavily, rate 0.3 adapts fast). Reversing the
convention changes the baseline dynamics, hence this note.

``AdaptiveState`` is treated functionally: updates return a new state.
Confine each experiment's state to one logical thread; the pure functions
here are freely shareable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SurpriseWeights",
    "SurpriseInputs",
    "AdaptiveState",
    "surprise",
    "ema_update",
    "lambda_w",
    "beta_eff",
    "lcb_score",
    "update_surprise_ema",
    "trace_snapshot",
]


@dataclass(frozen=True)
class SurpriseWeights:
    """Fusion weights for the three surprise channels, plus the clip ceiling."""

    w_r: float = 0.5
    w_q: float = 0.3
    w_kappa: float = 0.2
    clip_max: float = 10.0

    def __post_init__(self):
        for name in ("w_r", "w_q", "w_kappa"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.clip_max <= 0.0:
            raise ValueError(f"clip_max must be > 0, got {self.clip_max}")


@dataclass(frozen=True)
class SurpriseInputs:
    """One iteration's channel readings.

    reward_z:     reward z-score (dimensionless, sign carries no meaning here)
    q_std_ratio:  ensemble Q-std over its running baseline, >= 0
    kappa_div:    absolute drift of the penalty trace from its EMA, >= 0
    """

    reward_z: float
    q_std_ratio: float
    kappa_div: float

    def __post_init__(self):
        vals = (self.reward_z, self.q_std_ratio, self.kappa_div)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"surprise inputs must be finite, got {vals}")
        if self.q_std_ratio < 0.0:
            raise ValueError(f"q_std_ratio must be >= 0, got {self.q_std_ratio}")
        if self.kappa_div < 0.0:
            raise ValueError(f"kappa_div must be >= 0, got {self.kappa_div}")


@dataclass(frozen=True)
class AdaptiveState:
    """Baselines and coefficients for the penalty chain.

    ema_baseline is None until the first observation: it is seeded with the
    first raw value so startup produces no spurious penalty. The baseline
    updates *after* the penalty is extracted, so a fresh spike is measured
    against the pre-spike baseline.
    """

    beta_base: float = -2.0
    c_penalty: float = 0.5
    ema_rate: float = 0.95
    surprise_ema_rate: float = 0.3
    ema_baseline: float | None = None
    surprise_ema: float | None = None

    def __post_init__(self):
        if self.c_penalty < 0.0:
            raise ValueError(f"c_penalty must be >= 0, got {self.c_penalty}")
        for name in ("ema_rate", "surprise_ema_rate"):
            r = getattr(self, name)
            if not 0.0 < r < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {r}")
        if self.ema_baseline is not None and not 0.0 <= self.ema_baseline <= 1.0:
            raise ValueError(f"ema_baseline must lie in [0, 1], got {self.ema_baseline}")


def surprise(inputs: SurpriseInputs, weights: SurpriseWeights) -> float:
    """Fused surprise, clipped to [0, clip_max]."""
    raw = (
        weights.w_r * abs(inputs.reward_z)
        + weights.w_q * inputs.q_std_ratio
        + weights.w_kappa * inputs.kappa_div
    )
    return float(min(max(raw, 0.0), weights.clip_max))


def ema_update(prev: float, x: float, rate: float) -> float:
    """rate * prev + (1 - rate) * x; rate is retention of the previous value."""
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must lie in (0, 1), got {rate}")
    return rate * prev + (1.0 - rate) * x


def lambda_w(h_bar: float, h_max: int, state: AdaptiveState) -> tuple[float, AdaptiveState]:
    """Penalty from the expected run-length, baselined against its EMA.

    raw = h_bar / (h_max - 1); the penalty is the positive part of
    raw - baseline, and the baseline then absorbs raw at ``ema_rate``.
    Returns (penalty, updated state).
    """
    if h_max < 2:
        raise ValueError(f"h_max must be >= 2, got {h_max}")
    if not 0.0 <= h_bar <= h_max - 1:
        raise ValueError(f"h_bar {h_bar} outside [0, {h_max - 1}]")
    raw = h_bar / (h_max - 1)
    baseline = raw if state.ema_baseline is None else state.ema_baseline
    lam = max(0.0, raw - baseline)
    new_baseline = ema_update(baseline, raw, state.ema_rate)
    return lam, replace(state, ema_baseline=new_baseline)


def beta_eff(state: AdaptiveState, lam: float) -> float:
    """Effective LCB coefficient beta_base - lam * c_penalty (never above base)."""
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    return state.beta_base - lam * state.c_penalty


def lcb_score(q_mean: float, q_std: float, beta: float) -> float:
    """Confidence-weighted action score q_mean + beta * q_std.

    With beta < 0 this is a lower confidence bound; actions with equal
    ensemble disagreement keep their q_mean ranking for every beta.
    """
    if q_std < 0.0:
        raise ValueError(f"q_std must be >= 0, got {q_std}")
    return q_mean + beta * q_std


def update_surprise_ema(state: AdaptiveState, xi: float) -> tuple[float, AdaptiveState]:
    """Post-fusion surprise smoothing; returns (smoothed value, updated state).

    The first observation seeds the EMA with itself.
    """
    prev = xi if state.surprise_ema is None else state.surprise_ema
    smoothed = ema_update(prev, xi, state.surprise_ema_rate)
    return smoothed, replace(state, surprise_ema=smoothed)


def trace_snapshot(
    xi: float, h_bar: float, h_max: int, lam: float, state: AdaptiveState
) -> dict:
    """Loggable per-step view of the chain: xi, h_bar, raw, baseline, lambda_w, beta_eff.

    ``state`` is the post-update state for the step (its baseline already
    absorbed the step's raw value).
    """
    return {
        "xi": float(xi),
        "h_bar": float(h_bar),
        "raw": h_bar / (h_max - 1),
        "baseline": state.ema_baseline,
        "lambda_w": float(lam),
        "beta_eff": beta_eff(state, lam),
    }
