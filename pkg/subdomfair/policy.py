"""Per-item logistic decision policy P̂_θ(ŷ | X).

Decisions are conditionally independent given the items:
P̂_θ(ŷ | X) = Π_i p_i^ŷ_i (1 − p_i)^(1 − ŷ_i) with p_i = σ(θ·x_i).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .metrics import DecisionVector
from .validation import ValidationError

PROB_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class PolicyModel:
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if not np.isfinite(theta).all():
            raise ValidationError(["policy weights must be finite"])
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    def __len__(self) -> int:
        return self.theta.shape[0]


def init_policy(l: int) -> PolicyModel:
    """θ₀ = 0, so every item starts at probability 1/2."""
    if l < 1:
        raise ValidationError([f"policy needs at least one weight, got l={l}"])
    return PolicyModel(theta=np.zeros(l))


def _check_items(model: PolicyModel, items: np.ndarray) -> np.ndarray:
    items = np.asarray(items, dtype=np.float64)
    if items.ndim != 2 or items.shape[1] != len(model):
        raise ValidationError(
            [f"items have shape {items.shape}, policy expects (m, {len(model)})"]
        )
    return items


def _ids_for(items: np.ndarray, item_ids: Optional[Sequence[int]]) -> np.ndarray:
    if item_ids is None:
        return np.arange(items.shape[0])
    return np.asarray(item_ids)


def predict_proba(model: PolicyModel, items: np.ndarray) -> np.ndarray:
    items = _check_items(model, items)
    return expit(items @ model.theta)


def sample_decisions(
    model: PolicyModel,
    items: np.ndarray,
    seed: int,
    item_ids: Optional[Sequence[int]] = None,
) -> DecisionVector:
    """ŷ_i ~ Bernoulli(p_i), independently, from ``default_rng(seed)``."""
    p = predict_proba(model, items)
    u = np.random.default_rng(seed).random(p.shape[0])
    return DecisionVector(values=(u < p), item_ids=_ids_for(p, item_ids))


def hard_decisions(
    model: PolicyModel, items: np.ndarray, item_ids: Optional[Sequence[int]] = None
) -> DecisionVector:
    """Most probable decision per item; p = 0.5 resolves to 1."""
    p = predict_proba(model, items)
    return DecisionVector(values=(p >= 0.5), item_ids=_ids_for(p, item_ids))


def log_prob(model: PolicyModel, items: np.ndarray, d: DecisionVector) -> float:
    """log P̂_θ(d | X), with probabilities clamped away from 0 and 1."""
    p = np.clip(predict_proba(model, items), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = d.values
    return float(np.sum(y * np.log(p) + (1 - y) * np.log1p(-p)))


def log_prob_gradient(
    model: PolicyModel, items: np.ndarray, d: DecisionVector
) -> np.ndarray:
    """∇_θ log P̂_θ(d | X) = Σ_i (ŷ_i − p_i) x_i."""
    items = _check_items(model, items)
    if len(d) != items.shape[0]:
        raise ValidationError(
            [f"{len(d)} decisions for {items.shape[0]} items"]
        )
    p = expit(items @ model.theta)
    return items.T @ (d.values - p)
