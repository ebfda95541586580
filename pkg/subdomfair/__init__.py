"""
Subdomfair - fairness-aware subdominance minimization

Trains a per-item logistic decision policy whose performance and fairness
profile outperforms noisy reference decisions ("demonstrations") produced by
post-processed classifiers, by minimizing expected subdominance with policy
gradient.

Usage:
    from subdomfair import (DEFAULT_METRICS, TrainConfig, generate_synthetic,
                            split, synthesize_demos, train)

    ds = generate_synthetic(seed=0, m=4000, l=8, group_rate=0.4, flip_rate=0.05)
    halves = split(ds, 0.5, seed=0)
    demos = synthesize_demos(halves.first, n=20, epsilon=0.2, constraint="dp",
                             seed=0, metric_ids=DEFAULT_METRICS)
    report = train(demos, halves.first, TrainConfig())
"""

from .dataset import Dataset, SplitPair, flip_noise, generate_synthetic, load_tabular, split
from .demogen import DemonstrationSet, GroupThresholds, synthesize_demos
from .evaluation import (
    EvaluationReport,
    evaluate_on_test,
    export_results,
    gamma_superhuman,
    pareto_dominates,
)
from .metrics import DEFAULT_METRICS, DecisionVector, MetricProfile, profile
from .policy import PolicyModel, hard_decisions, init_policy, sample_decisions
from .subdominance import AlphaVector, optimize_alpha, subdom_total
from .trainer import TrainConfig, TrainReport, estimate_gradient, mean_subdominance, train
from .validation import SubdomfairError, ValidationError

__all__ = [
    "Dataset",
    "SplitPair",
    "flip_noise",
    "generate_synthetic",
    "load_tabular",
    "split",
    "DemonstrationSet",
    "GroupThresholds",
    "synthesize_demos",
    "EvaluationReport",
    "evaluate_on_test",
    "export_results",
    "gamma_superhuman",
    "pareto_dominates",
    "DEFAULT_METRICS",
    "DecisionVector",
    "MetricProfile",
    "profile",
    "PolicyModel",
    "hard_decisions",
    "init_policy",
    "sample_decisions",
    "AlphaVector",
    "optimize_alpha",
    "subdom_total",
    "TrainConfig",
    "TrainReport",
    "estimate_gradient",
    "mean_subdominance",
    "train",
    "SubdomfairError",
    "ValidationError",
]
