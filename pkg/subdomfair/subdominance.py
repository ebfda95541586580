"""Subdominance of model decisions against reference demonstrations.

For metric k, a model value f̂ and a demonstration value f̃, the hinge
[α(f̂ − f̃) + 1]₊ is zero only when the model beats the demonstration by at
least the margin 1/α. For fixed f̂, the per-feature objective

    Γ(α) = (1/N) Σ_j [α(f̂ − f̃_j) + 1]₊ + λα

is convex and piecewise linear in α ≥ 0, so its minimum sits at α = 0 or at
one of the corners α = 1/(f̃_j − f̂) where a demonstration's hinge reaches
zero. ``optimize_alpha`` finds that corner from order statistics.

An optional floor α ≥ α_min keeps the problem convex; the constrained
optimum is max(α*, α_min). A positive floor keeps Γ sloped in f̂ when the
model trails every demonstration, where the unconstrained optimum is α = 0
and Γ = 1 regardless of f̂.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set

import numpy as np

from .metrics import MetricProfile
from .validation import ValidationError, ensure_valid, validate_shared_metrics

# hinge arguments this close to zero count as active (boundary support vectors)
BOUNDARY_TOL = 1e-12
MIN_SPREAD = 1e-3


@dataclass(frozen=True, eq=False)
class AlphaVector:
    """Nonnegative hinge slopes, one per metric; margins are 1/α."""

    alphas: np.ndarray

    def __post_init__(self):
        alphas = np.array(self.alphas, dtype=np.float64).reshape(-1)
        if (alphas < 0).any() or not np.isfinite(alphas).all():
            raise ValidationError([f"alphas must be finite and >= 0, got {alphas.tolist()}"])
        alphas.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)

    def __len__(self) -> int:
        return self.alphas.shape[0]

    def margins(self) -> np.ndarray:
        """Margin boundaries 1/α_k; infinite where α_k = 0."""
        with np.errstate(divide="ignore"):
            return np.where(self.alphas > 0, 1.0 / self.alphas, np.inf)


@dataclass(frozen=True)
class AlphaSolution:
    alpha: float
    gamma_k: float
    support_count: int


def _check_alpha(alpha: float) -> None:
    if not alpha >= 0:
        raise ValidationError([f"alpha must be >= 0, got {alpha!r}"])


def subdom_feature(f_hat: float, f_demo: float, alpha: float) -> float:
    """[α(f̂ − f̃) + 1]₊"""
    _check_alpha(alpha)
    return max(alpha * (f_hat - f_demo) + 1.0, 0.0)


def _profile_matrix(profiles: Sequence[MetricProfile]) -> np.ndarray:
    return np.vstack([p.values for p in profiles])


def subdom_total(
    hat_profile: MetricProfile,
    demo_profiles: Sequence[MetricProfile],
    alphas: AlphaVector,
) -> float:
    """Mean over demonstrations of the summed per-metric hinges."""
    errors = []
    if not demo_profiles:
        errors.append("at least one demonstration profile is required")
    errors += validate_shared_metrics(hat_profile.metric_ids, demo_profiles)
    if len(alphas) != len(hat_profile.metric_ids):
        errors.append(
            f"{len(alphas)} alphas for {len(hat_profile.metric_ids)} metrics"
        )
    ensure_valid(errors)

    demos = _profile_matrix(demo_profiles)
    hinge = np.maximum(alphas.alphas * (hat_profile.values - demos) + 1.0, 0.0)
    return float(hinge.sum(axis=1).mean())


def gamma_objective(
    f_hat: float, demo_values: np.ndarray, alpha: float, lam: float
) -> float:
    """Γ(α) for a single metric."""
    hinge = np.maximum(alpha * (f_hat - demo_values) + 1.0, 0.0)
    return float(hinge.mean() + lam * alpha)


def optimize_alpha(
    f_hat: float, demo_values: Sequence[float], lam: float, alpha_min: float = 0.0
) -> AlphaSolution:
    """Minimize Γ(α) over α ≥ α_min in closed form.

    With demonstration values sorted ascending (ties by original index), the
    unconstrained optimum is the corner α* = 1/(f̃⁽ᵐ⁾ − f̂) for the smallest
    m with f̃⁽ᵐ⁾ > f̂ and f̂ + λN/m ≤ (1/m) Σ_{j≤m} f̃⁽ʲ⁾, i.e. the first
    corner at which the left subgradient is no longer negative. If no such m
    exists, Γ is nondecreasing and α* = 0 with Γ = 1. The floor then gives
    α = max(α*, α_min).
    """
    values = np.asarray(demo_values, dtype=np.float64).reshape(-1)
    errors = []
    if values.size == 0:
        errors.append("demo_values must be nonempty")
    if not lam >= 0:
        errors.append(f"lambda must be >= 0, got {lam!r}")
    if not (alpha_min >= 0 and np.isfinite(alpha_min)):
        errors.append(f"alpha_min must be finite and >= 0, got {alpha_min!r}")
    ensure_valid(errors)

    n = values.size
    ordered = np.sort(values, kind="stable")
    prefix = np.cumsum(ordered)
    m = np.arange(1, n + 1)
    feasible = (ordered > f_hat) & (m * f_hat + n * lam <= prefix)

    alpha = 0.0
    if feasible.any():
        alpha = 1.0 / (ordered[int(np.argmax(feasible))] - f_hat)
    alpha = max(alpha, float(alpha_min))

    if alpha == 0.0:
        return AlphaSolution(alpha=0.0, gamma_k=1.0, support_count=n)
    active = alpha * (f_hat - values) + 1.0 >= -BOUNDARY_TOL
    return AlphaSolution(
        alpha=float(alpha),
        gamma_k=gamma_objective(f_hat, values, alpha, lam),
        support_count=int(np.count_nonzero(active)),
    )


def alpha_floors(demo_matrix: np.ndarray, scale: float) -> np.ndarray:
    """Per-metric floors scale / sd_k, sd_k the spread of the demo values.

    A floor of c/sd_k caps the margin 1/α_k at sd_k/c. Spreads below
    ``MIN_SPREAD`` are raised to it.
    """
    if not (scale >= 0 and np.isfinite(scale)):
        raise ValidationError([f"alpha floor scale must be finite and >= 0, got {scale!r}"])
    matrix = np.asarray(demo_matrix, dtype=np.float64)
    if scale == 0:
        return np.zeros(matrix.shape[1])
    spread = np.maximum(matrix.std(axis=0), MIN_SPREAD)
    return scale / spread


def support_vectors(
    f_hat: float, demo_values: Sequence[float], alpha: float
) -> Set[int]:
    """Indices j with α(f̂ − f̃_j) + 1 ≥ 0, boundary included."""
    _check_alpha(alpha)
    values = np.asarray(demo_values, dtype=np.float64).reshape(-1)
    active = alpha * (f_hat - values) + 1.0 >= -BOUNDARY_TOL
    return set(np.flatnonzero(active).tolist())


def optimize_alphas(
    hat_values: np.ndarray,
    demo_matrix: np.ndarray,
    lam: float,
    alpha_min: Optional[np.ndarray] = None,
) -> List[AlphaSolution]:
    """Independent per-metric α selection for one model profile."""
    k_count = demo_matrix.shape[1]
    floors = np.zeros(k_count) if alpha_min is None else np.broadcast_to(alpha_min, (k_count,))
    return [
        optimize_alpha(float(hat_values[k]), demo_matrix[:, k], lam, float(floors[k]))
        for k in range(k_count)
    ]


def support_union(
    hat_rows: Iterable[np.ndarray],
    demo_matrix: np.ndarray,
    lam: float,
    alpha_min: Optional[np.ndarray] = None,
) -> Set[int]:
    """Union over model profiles and metrics of the support-vector sets."""
    union: Set[int] = set()
    for hat in hat_rows:
        for k, sol in enumerate(optimize_alphas(hat, demo_matrix, lam, alpha_min)):
            union |= support_vectors(float(hat[k]), demo_matrix[:, k], sol.alpha)
    return union


def generalization_gamma(support_union_size: int, n_demos: int) -> float:
    """1 − |support-vector union| / N."""
    errors = []
    if n_demos < 1:
        errors.append(f"n_demos must be >= 1, got {n_demos}")
    elif not 0 <= support_union_size <= n_demos:
        errors.append(
            f"support_union_size must lie in [0, {n_demos}], got {support_union_size}"
        )
    ensure_valid(errors)
    return 1.0 - support_union_size / n_demos
