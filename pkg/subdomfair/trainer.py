"""Subdominance policy-gradient optimization.

Each iteration samples decisions ŷ_i from P̂_θ on every demonstration's item
set, picks the optimal hinge slopes α_k for each sample against all N
demonstration profiles, and takes a score-function step on the expected
subdominance Σ_k Γ_k.

The θ kept at the end is the one whose hard decisions score the lowest
subdominance on the training demonstrations' item sets. That score is
deterministic in θ, so best-θ tracking and early stopping ignore sampling
noise.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Set, Tuple

import numpy as np

from .dataset import Dataset
from .demogen import DemonstrationSet, fit_base_scorer
from .metrics import DEFAULT_METRICS, METRICS, profile_values
from .policy import (
    PolicyModel,
    hard_decisions,
    init_policy,
    log_prob_gradient,
    sample_decisions,
)
from .subdominance import AlphaVector, alpha_floors, optimize_alphas
from .subdominance import support_union as _support_union
from .validation import (
    ensure_valid,
    validate_demonstrations,
    validate_metric_ids,
)

logger = logging.getLogger(__name__)

INIT_MODES = ("scorer", "zeros")


@dataclass
class TrainConfig:
    """Optimizer settings.

    ``alpha_floor`` c bounds every α_k below by c/sd_k, sd_k the spread of
    the training demonstrations on metric k; 0 leaves α unconstrained. With
    ``normalize`` each score-function term is divided by its demonstration's
    item count, which makes ``eta`` independent of the dataset size.
    """

    eta: float = 200.0
    lam: float = 0.01
    alpha_floor: float = 0.5
    max_iters: int = 300
    patience: int = 300
    samples_per_demo: int = 2
    seed: int = 0
    metric_ids: Tuple[str, ...] = DEFAULT_METRICS
    init: str = "scorer"
    baseline: bool = True
    normalize: bool = True
    log_every: int = 25

    def __post_init__(self):
        self.metric_ids = tuple(self.metric_ids)

    def validate(self) -> List[str]:
        errors = []
        if not self.eta > 0:
            errors.append(f"eta must be > 0, got {self.eta}")
        if not self.lam >= 0:
            errors.append(f"lambda must be >= 0, got {self.lam}")
        if not (self.alpha_floor >= 0 and np.isfinite(self.alpha_floor)):
            errors.append(f"alpha_floor must be finite and >= 0, got {self.alpha_floor}")
        if self.max_iters < 1:
            errors.append(f"max_iters must be >= 1, got {self.max_iters}")
        if self.patience < 1:
            errors.append(f"patience must be >= 1, got {self.patience}")
        if self.samples_per_demo < 1:
            errors.append(f"samples_per_demo must be >= 1, got {self.samples_per_demo}")
        if self.init not in INIT_MODES:
            errors.append(f"init must be one of {INIT_MODES}, got {self.init!r}")
        errors += validate_metric_ids(self.metric_ids, METRICS)
        return errors

    def to_record(self) -> dict:
        record = asdict(self)
        record["metric_ids"] = list(self.metric_ids)
        return record


@dataclass(frozen=True, eq=False)
class TrainReport:
    """Per-iteration histories; entry t describes θ_t, the weights before
    the t-th update."""

    final_theta: PolicyModel
    alpha_history: np.ndarray
    subdom_history: np.ndarray
    selection_history: np.ndarray
    iterations_run: int
    best_iteration: int
    metric_ids: Tuple[str, ...]
    config: dict = field(default_factory=dict)

    @property
    def learned_alpha(self) -> AlphaVector:
        """Mean α at the iteration whose θ was kept."""
        return AlphaVector(self.alpha_history[self.best_iteration])

    @property
    def best_subdominance(self) -> float:
        """Hard-decision subdominance of the kept θ."""
        return float(self.selection_history[self.best_iteration])


class _DemoBatch:
    """Per-demonstration item matrices and clean labels, resolved once."""

    def __init__(
        self,
        demos: DemonstrationSet,
        train_sh: Dataset,
        metric_ids,
        alpha_floor: float = 0.0,
    ):
        ensure_valid(validate_demonstrations(demos, train_sh, metric_ids))
        self.metric_ids = tuple(metric_ids)
        self.profiles = demos.profile_matrix()
        self.floors = alpha_floors(self.profiles, alpha_floor)
        self.parts = []
        for demo in demos.demos:
            pos = train_sh.positions_of(demo.item_ids)
            self.parts.append(
                (train_sh.items[pos], demo.item_ids, train_sh.labels[pos], train_sh.groups[pos])
            )

    def __len__(self) -> int:
        return len(self.parts)

    def objective(self, values: np.ndarray, lam: float) -> Tuple[float, np.ndarray]:
        """Σ_k Γ_k and the per-metric α for one profile."""
        solutions = optimize_alphas(values, self.profiles, lam, self.floors)
        gamma = sum(sol.gamma_k for sol in solutions)
        return gamma, np.array([sol.alpha for sol in solutions])

    def hard_objective(self, model: PolicyModel, lam: float) -> float:
        """Mean Σ_k Γ_k of the hard decisions over the demo item sets."""
        total = 0.0
        for X, ids, y, a in self.parts:
            d = hard_decisions(model, X, ids)
            gamma, _ = self.objective(profile_values(d.values, y, a, self.metric_ids), lam)
            total += gamma
        return total / len(self.parts)


def _initial_policy(train_sh: Dataset, config: TrainConfig) -> PolicyModel:
    if config.init == "scorer":
        return fit_base_scorer(train_sh)
    return init_policy(train_sh.n_features)


def _estimate(
    model: PolicyModel, batch: _DemoBatch, config: TrainConfig, t: int
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Mean Σ_k Γ_k, mean α and the score-function gradient at iteration t.

    Sample s of demo i uses seed ``config.seed + (t·N + i)·S + s`` with
    S = samples_per_demo.
    """
    n, per = len(batch), config.samples_per_demo
    gammas, alphas, scores = [], [], []
    for i, (X, ids, y, a) in enumerate(batch.parts):
        for s in range(per):
            d = sample_decisions(model, X, config.seed + (t * n + i) * per + s, ids)
            gamma, alpha = batch.objective(
                profile_values(d.values, y, a, batch.metric_ids), config.lam
            )
            score = log_prob_gradient(model, X, d)
            gammas.append(gamma)
            alphas.append(alpha)
            scores.append(score / len(ids) if config.normalize else score)

    gammas = np.array(gammas)
    mean_gamma = float(gammas.mean())
    weights = gammas - mean_gamma if config.baseline else gammas
    step = np.tensordot(weights, np.array(scores), axes=1) / (n * per)
    return mean_gamma, np.mean(alphas, axis=0), step


def estimate_gradient(
    model: PolicyModel,
    demos: DemonstrationSet,
    train_sh: Dataset,
    config: TrainConfig,
    iteration: int = 0,
) -> Tuple[float, np.ndarray]:
    """The (mean subdominance, gradient) pair ``train`` uses at ``iteration``."""
    ensure_valid(config.validate())
    batch = _DemoBatch(demos, train_sh, config.metric_ids, config.alpha_floor)
    mean_gamma, _, step = _estimate(model, batch, config, iteration)
    return mean_gamma, step


def train(
    demos: DemonstrationSet, train_sh: Dataset, config: TrainConfig
) -> TrainReport:
    """Minimize expected subdominance; return the θ whose hard decisions
    scored best."""
    ensure_valid(config.validate())
    batch = _DemoBatch(demos, train_sh, config.metric_ids, config.alpha_floor)
    logger.debug("alpha floors %s", np.round(batch.floors, 3).tolist())

    model = _initial_policy(train_sh, config)
    best_value, best_theta, best_iter = np.inf, model.theta, 0
    stall = 0
    alpha_history, subdom_history, selection_history = [], [], []

    for t in range(config.max_iters):
        mean_gamma, mean_alpha, step = _estimate(model, batch, config, t)
        selection = batch.hard_objective(model, config.lam)
        subdom_history.append(mean_gamma)
        alpha_history.append(mean_alpha)
        selection_history.append(selection)

        if selection < best_value:
            best_value, best_theta, best_iter = selection, model.theta, t
            stall = 0
        else:
            stall += 1

        if config.log_every and t % config.log_every == 0:
            logger.info(
                "iter %d: sampled subdominance %.6f, hard decisions %.6f",
                t, mean_gamma, selection,
            )

        model = PolicyModel(theta=model.theta - config.eta * step)

        if stall >= config.patience:
            logger.info("no improvement for %d iterations; stopping at %d", stall, t)
            break

    logger.info("best hard-decision subdominance %.6f at iteration %d", best_value, best_iter)
    return TrainReport(
        final_theta=PolicyModel(theta=best_theta),
        alpha_history=np.array(alpha_history),
        subdom_history=np.array(subdom_history),
        selection_history=np.array(selection_history),
        iterations_run=len(subdom_history),
        best_iteration=best_iter,
        metric_ids=tuple(config.metric_ids),
        config=config.to_record(),
    )


def mean_subdominance(
    model: PolicyModel,
    demos: DemonstrationSet,
    train_sh: Dataset,
    lam: float,
    metric_ids: Sequence[str],
    seed: int,
    alpha_floor: float = 0.0,
) -> float:
    """Monte-Carlo estimate of E[Σ_k Γ_k], one sample per demo (seed + i)."""
    batch = _DemoBatch(demos, train_sh, metric_ids, alpha_floor)
    total = 0.0
    for i, (X, ids, y, a) in enumerate(batch.parts):
        d = sample_decisions(model, X, seed + i, ids)
        gamma, _ = batch.objective(profile_values(d.values, y, a, batch.metric_ids), lam)
        total += gamma
    return total / len(batch)


def hard_subdominance(
    model: PolicyModel,
    demos: DemonstrationSet,
    train_sh: Dataset,
    lam: float,
    metric_ids: Sequence[str],
    alpha_floor: float = 0.0,
) -> float:
    """Mean Σ_k Γ_k of the model's hard decisions; the score ``train``
    keeps θ by."""
    batch = _DemoBatch(demos, train_sh, metric_ids, alpha_floor)
    return batch.hard_objective(model, lam)


def support_union(
    model: PolicyModel,
    demos: DemonstrationSet,
    train_sh: Dataset,
    lam: float,
    metric_ids: Sequence[str],
    alpha_floor: float = 0.0,
) -> Set[int]:
    """Demonstrations that are support vectors for the model's hard decisions.

    Hard decisions stand in for the support of P̂_θ, which concentrates on
    them as the policy becomes deterministic.
    """
    batch = _DemoBatch(demos, train_sh, metric_ids, alpha_floor)
    rows = [
        profile_values(hard_decisions(model, X, ids).values, y, a, batch.metric_ids)
        for X, ids, y, a in batch.parts
    ]
    return _support_union(rows, batch.profiles, lam, batch.floors)
