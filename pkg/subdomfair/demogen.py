"""Synthetic reference decisions ("demonstrations").

Each demonstration is produced by a noisy decision maker: labels and groups
of a copy of train-sh are corrupted, the copy is split into train-pp and
test-pp, a logistic scorer is fit on train-pp and post-processed for a group
fairness constraint, and the resulting randomized rule decides test-pp. The
decision vector is then scored against the clean labels and groups.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit

from .dataset import Dataset, flip_noise, split
from .metrics import METRICS, DecisionVector, MetricProfile, profile_values
from .policy import PolicyModel, predict_proba
from .validation import ValidationError, ensure_valid, validate_metric_ids

logger = logging.getLogger(__name__)

CONSTRAINTS = ("dp", "eqodds")


@dataclass(frozen=True)
class GroupRule:
    """Randomized threshold rule for one group.

    score > threshold ⇒ 1 w.p. ``above_prob``; score == threshold ⇒ 1 w.p.
    ``tie_prob``; score < threshold ⇒ 1 w.p. ``below_prob``.
    """

    threshold: float
    tie_prob: float
    above_prob: float = 1.0
    below_prob: float = 0.0

    def __post_init__(self):
        bad = [
            name
            for name in ("threshold", "tie_prob", "above_prob", "below_prob")
            if not 0.0 <= getattr(self, name) <= 1.0
        ]
        if bad:
            raise ValidationError([f"group rule fields {bad} must lie in [0, 1]"])

    def probability(self, scores: np.ndarray) -> np.ndarray:
        return np.where(
            scores > self.threshold,
            self.above_prob,
            np.where(scores == self.threshold, self.tie_prob, self.below_prob),
        )


@dataclass(frozen=True)
class MixedRule:
    """Convex combination of threshold rules.

    An item is decided positive with the weighted mean of the component
    probabilities, so the mixture's expected rates are the weighted rates.
    """

    rules: Tuple[GroupRule, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        errors = []
        if not self.rules or len(self.rules) != len(self.weights):
            errors.append("a mixed rule needs one weight per component rule")
        elif any(w < 0.0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
            errors.append(f"mixture weights must be nonnegative and sum to 1, got {self.weights}")
        ensure_valid(errors)

    def probability(self, scores: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(scores))
        for rule, w in zip(self.rules, self.weights):
            out += w * rule.probability(scores)
        return out


Rule = Union[GroupRule, MixedRule]


@dataclass(frozen=True)
class GroupThresholds:
    group0: Rule
    group1: Rule
    constraint: str = "dp"

    def rule(self, g: int) -> Rule:
        return self.group1 if g else self.group0

    def probabilities(self, scores: np.ndarray, groups: np.ndarray) -> np.ndarray:
        """Per-item probability of a positive decision."""
        prob = np.empty(scores.shape[0])
        for g in (0, 1):
            mask = groups == g
            prob[mask] = self.rule(g).probability(scores[mask])
        return prob


@dataclass(frozen=True)
class Provenance:
    epsilon: float
    constraint: str
    base_seed: int
    seeds: Tuple[int, ...]
    metric_ids: Tuple[str, ...]
    baseline: str = "post_processing"
    role: str = "train"


@dataclass(frozen=True)
class DemonstrationSet:
    """N reference decision vectors with their clean-label profiles."""

    demos: Tuple[DecisionVector, ...]
    profiles: Tuple[MetricProfile, ...]
    provenance: Provenance

    def __post_init__(self):
        errors = []
        if len(self.demos) < 1:
            errors.append("demonstration set is empty")
        if len(self.demos) != len(self.profiles):
            errors.append(f"{len(self.demos)} demos but {len(self.profiles)} profiles")
        ensure_valid(errors)

    def __len__(self) -> int:
        return len(self.demos)

    @property
    def metric_ids(self) -> Tuple[str, ...]:
        return self.provenance.metric_ids

    def profile_matrix(self) -> np.ndarray:
        """N×K matrix of cached demonstration profiles."""
        return np.vstack([p.values for p in self.profiles])


def fit_base_scorer(
    train: Dataset, max_epochs: int = 500, tol: float = 1e-5
) -> PolicyModel:
    """Logistic regression by full-batch gradient descent on mean log loss.

    The step size 4/σ²_max(X/√m) is the inverse smoothness constant of the
    mean log loss. A single-class training set yields the constant θ = 0.
    """
    if len(train) == 0:
        raise ValidationError(["cannot fit a scorer on an empty dataset"])

    X = train.items
    y = train.labels.astype(np.float64)
    theta = np.zeros(train.n_features)
    if y.min() == y.max():
        logger.warning("single-class training set; returning constant scorer")
        return PolicyModel(theta=theta)

    m = X.shape[0]
    smoothness = 0.25 * np.linalg.norm(X, 2) ** 2 / m
    step = 1.0 / smoothness

    for epoch in range(max_epochs):
        grad = X.T @ (expit(X @ theta) - y) / m
        if np.linalg.norm(grad) < tol:
            logger.debug("scorer converged after %d epochs", epoch)
            break
        theta -= step * grad
    return PolicyModel(theta=theta)


def _top_k_errors(scores: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Error counts when the k highest scores are predicted positive.

    Returned at tie-block endpoints only: (k values, errors). Randomizing
    inside a tie block interpolates linearly between its endpoints.
    """
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.int64)
    positives = int(y.sum())
    # errors(k) = negatives among the top k + positives outside the top k
    neg_in = np.concatenate([[0], np.cumsum(1 - y)])
    pos_in = np.concatenate([[0], np.cumsum(y)])
    errors = neg_in + (positives - pos_in)
    block_end = np.concatenate([[True], s[1:] != s[:-1], [True]])
    # block_end[k] is true when k sits between two distinct scores
    ks = np.flatnonzero(block_end)
    return ks.astype(np.float64), errors[ks].astype(np.float64)


def _rule_for_count(scores: np.ndarray, k: float) -> GroupRule:
    """Rule that predicts exactly k positives in expectation."""
    s = np.sort(scores)[::-1]
    n = s.shape[0]
    if k <= 0:
        return GroupRule(threshold=float(s[0]), tie_prob=0.0)
    idx = min(int(np.ceil(k - 1e-12)) - 1, n - 1)
    t = s[max(idx, 0)]
    above = int(np.count_nonzero(scores > t))
    ties = int(np.count_nonzero(scores == t))
    tie_prob = float(np.clip((k - above) / ties, 0.0, 1.0))
    return GroupRule(threshold=float(t), tie_prob=tie_prob)


def _postprocess_dp(
    scores: np.ndarray, groups: np.ndarray, labels: np.ndarray
) -> GroupThresholds:
    sizes, curves = [], []
    for g in (0, 1):
        mask = groups == g
        sizes.append(int(mask.sum()))
        curves.append(_top_k_errors(scores[mask], labels[mask]))

    # total expected error is piecewise linear in the shared positive rate,
    # with breakpoints where either group crosses a tie block
    candidates = np.unique(
        np.concatenate([curves[g][0] / sizes[g] for g in (0, 1)])
    )
    total = sum(
        np.interp(candidates * sizes[g], curves[g][0], curves[g][1]) for g in (0, 1)
    )
    rate = float(candidates[int(np.argmin(total))])

    rules = [
        _rule_for_count(scores[groups == g], rate * sizes[g]) for g in (0, 1)
    ]
    return GroupThresholds(group0=rules[0], group1=rules[1], constraint="dp")


def _roc_vertices(scores: np.ndarray, labels: np.ndarray) -> Tuple[List[GroupRule], np.ndarray, np.ndarray]:
    """Deterministic rules at every tie-block boundary with their TP and FP counts.

    Vertex 0 decides nothing positive; vertex k decides the k highest
    distinct score blocks positive.
    """
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.int64)
    tp = np.concatenate([[0], np.cumsum(y)])
    fp = np.concatenate([[0], np.cumsum(1 - y)])
    ends = np.flatnonzero(np.append(s[1:] != s[:-1], True)) + 1
    rules = [GroupRule(threshold=float(s[0]), tie_prob=0.0)]
    rules += [GroupRule(threshold=float(s[k - 1]), tie_prob=1.0) for k in ends]
    counts = np.concatenate([[0], ends])
    return rules, tp[counts], fp[counts]


def _postprocess_eqodds(
    scores: np.ndarray, groups: np.ndarray, labels: np.ndarray
) -> GroupThresholds:
    """LP over convex weights on each group's ROC vertices.

    Any point of a group's ROC hull is a mixture of vertex rules, so
    matching the weighted TPR and FPR across groups and minimizing the
    weighted error count gives the optimal equalized-odds rule.
    """
    per_group = []
    for g in (0, 1):
        mask = groups == g
        y = labels[mask]
        rules, tp, fp = _roc_vertices(scores[mask], y)
        n_pos = int((y == 1).sum())
        n_neg = y.size - n_pos
        # a rate with an empty denominator counts as 0
        tpr = tp / n_pos if n_pos else np.zeros(tp.size)
        fpr = fp / n_neg if n_neg else np.zeros(fp.size)
        per_group.append((rules, (n_pos - tp) + fp, tpr, fpr))

    k0 = len(per_group[0][0])
    k1 = len(per_group[1][0])
    c = np.concatenate([per_group[0][1], per_group[1][1]]).astype(np.float64)
    a_eq = np.vstack(
        [
            np.concatenate([np.ones(k0), np.zeros(k1)]),
            np.concatenate([np.zeros(k0), np.ones(k1)]),
            np.concatenate([per_group[0][2], -per_group[1][2]]),
            np.concatenate([per_group[0][3], -per_group[1][3]]),
        ]
    )
    res = linprog(c, A_eq=a_eq, b_eq=[1.0, 1.0, 0.0, 0.0], bounds=(0.0, None), method="highs")
    if not res.success:
        raise ValidationError([f"equalized-odds post-processing failed: {res.message}"])
    logger.debug("equalized-odds LP: %d + %d vertices, expected errors %.4f", k0, k1, res.fun)

    x = np.clip(res.x, 0.0, None)
    mixed = []
    for (rules, *_), w in ((per_group[0], x[:k0]), (per_group[1], x[k0:])):
        keep = np.flatnonzero(w > 1e-12)
        if keep.size == 0:
            keep = np.array([int(np.argmax(w))])
        weights = w[keep] / w[keep].sum()
        mixed.append(
            MixedRule(
                rules=tuple(rules[i] for i in keep),
                weights=tuple(float(v) for v in weights),
            )
        )
    return GroupThresholds(group0=mixed[0], group1=mixed[1], constraint="eqodds")


def postprocess(
    scores: np.ndarray, groups: np.ndarray, labels: np.ndarray, constraint: str
) -> GroupThresholds:
    """Group-specific randomized rules trading error against a constraint.

    ``dp`` equalizes expected positive rates exactly and minimizes expected
    error over the shared rate. ``eqodds`` mixes each group's ROC vertex
    rules so that expected TPR and FPR coincide, with minimum expected error
    over the whole ROC hull.
    """
    scores = np.asarray(scores, dtype=np.float64)
    groups = np.asarray(groups)
    labels = np.asarray(labels)
    errors = []
    if constraint not in CONSTRAINTS:
        errors.append(f"unknown constraint {constraint!r}; expected one of {CONSTRAINTS}")
    if not (scores.shape == groups.shape == labels.shape):
        errors.append("scores, groups and labels must be aligned")
    else:
        for g in (0, 1):
            if not (groups == g).any():
                errors.append(f"group {g} is empty; post-processing needs both groups")
    ensure_valid(errors)

    if constraint == "dp":
        return _postprocess_dp(scores, groups, labels)
    return _postprocess_eqodds(scores, groups, labels)


def apply_thresholds(
    th: GroupThresholds,
    scores: np.ndarray,
    groups: np.ndarray,
    seed: int,
    item_ids: Optional[Sequence[int]] = None,
) -> DecisionVector:
    """Seeded decisions from per-group randomized threshold rules."""
    scores = np.asarray(scores, dtype=np.float64)
    prob = th.probabilities(scores, np.asarray(groups))
    u = np.random.default_rng(seed).random(scores.shape[0])
    ids = np.arange(scores.shape[0]) if item_ids is None else item_ids
    return DecisionVector(values=(u < prob), item_ids=ids)


def _one_demo(
    train_sh: Dataset,
    epsilon: float,
    constraint: str,
    seed: int,
    metric_ids: Tuple[str, ...],
    target: Optional[Dataset],
) -> Tuple[DecisionVector, MetricProfile]:
    noisy = flip_noise(train_sh, epsilon, seed, flip_labels=True, flip_groups=True)
    halves = split(noisy, 0.5, seed)
    train_pp = halves.first

    scorer = fit_base_scorer(train_pp)
    th = postprocess(
        predict_proba(scorer, train_pp.items),
        train_pp.groups,
        train_pp.labels,
        constraint,
    )

    if target is None:
        clean, decide_on = train_sh, halves.second
    else:
        clean = target
        decide_on = flip_noise(target, epsilon, seed, flip_labels=False, flip_groups=True)

    d = apply_thresholds(
        th,
        predict_proba(scorer, decide_on.items),
        decide_on.groups,
        seed,
        item_ids=decide_on.ids,
    )
    pos = clean.positions_of(d.item_ids)
    prof = MetricProfile(
        metric_ids=metric_ids,
        values=profile_values(d.values, clean.labels[pos], clean.groups[pos], metric_ids),
    )
    return d, prof


def synthesize_demos(
    train_sh: Dataset,
    n: int,
    epsilon: float,
    constraint: str,
    seed: int,
    metric_ids: Sequence[str],
    target: Optional[Dataset] = None,
    workers: int = 1,
) -> DemonstrationSet:
    """N demonstrations with per-demo seeds ``seed + i``.

    With ``target`` given (test-sh), the post-processed rules trained on
    train-pp decide every target item, seeing group-noised attributes,
    instead of test-pp. Profiles use the target's clean labels and groups.
    """
    metric_ids = tuple(metric_ids)
    errors = validate_metric_ids(metric_ids, METRICS)
    if n < 1:
        errors.append(f"n must be >= 1, got {n}")
    if constraint not in CONSTRAINTS:
        errors.append(f"unknown constraint {constraint!r}")
    ensure_valid(errors)

    seeds = tuple(seed + i for i in range(n))

    def run(s: int):
        logger.debug("synthesizing demo with seed %d", s)
        return _one_demo(train_sh, epsilon, constraint, s, metric_ids, target)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]

    role = "train" if target is None else "test"
    logger.info(
        "synthesized %d %s demos (epsilon=%g, constraint=%s)", n, role, epsilon, constraint
    )
    return DemonstrationSet(
        demos=tuple(d for d, _ in results),
        profiles=tuple(p for _, p in results),
        provenance=Provenance(
            epsilon=float(epsilon),
            constraint=constraint,
            base_seed=seed,
            seeds=seeds,
            metric_ids=metric_ids,
            role=role,
        ),
    )


def mean_profile(demos: DemonstrationSet) -> MetricProfile:
    return MetricProfile(
        metric_ids=demos.metric_ids, values=demos.profile_matrix().mean(axis=0)
    )


__all__ = [
    "CONSTRAINTS",
    "GroupRule",
    "MixedRule",
    "GroupThresholds",
    "Provenance",
    "DemonstrationSet",
    "fit_base_scorer",
    "postprocess",
    "apply_thresholds",
    "synthesize_demos",
    "mean_profile",
]
