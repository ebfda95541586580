"""Pipeline stages shared by the CLI subcommands.

Seeds derive from the experiment seed: the train-sh/test-sh split and the
training demonstrations use ``seed``; held-out demonstrations use
``seed + TEST_DEMO_SEED_OFFSET``.

Demonstrations are synthesized on the dataset's own features. With
``group_feature`` on, the learned policy and the baselines it is compared
with also see the group indicator as an extra column.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Set, Tuple

from .config import ExperimentConfig
from .dataset import Dataset, SplitPair, generate_synthetic, load_tabular, split, with_group_feature
from .demogen import DemonstrationSet, synthesize_demos
from .evaluation import EvaluationReport, compare_methods, export_gamma_curve, export_results
from .storage import write_dataset, write_demos, write_report
from .subdominance import generalization_gamma
from .trainer import TrainReport, support_union, train
from .validation import ValidationError

logger = logging.getLogger(__name__)

SPLIT_FRACTION = 0.5
TEST_DEMO_SEED_OFFSET = 10_000


@dataclass(frozen=True)
class TrainedModel:
    report: TrainReport
    support: Tuple[int, ...]
    bound_gamma: float

    def extra(self) -> dict:
        """Diagnostics stored next to the training report."""
        return {"bound_gamma": self.bound_gamma, "support_union": list(self.support)}


def build_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset == "synthetic":
        s = cfg.synthetic
        return generate_synthetic(
            cfg.seed,
            s.m,
            s.l,
            s.group_rate,
            s.flip_rate,
            shift=s.shift,
            lead_weight=s.lead_weight,
            label_noise=s.label_noise,
            threshold=s.threshold,
        )
    if not cfg.paths.input:
        raise ValidationError([f"dataset {cfg.dataset!r} needs an input file (--input)"])
    return load_tabular(
        cfg.paths.input,
        cfg.dataset,
        include_protected=cfg.include_protected,
        compas_race=cfg.compas_race,
    )


def shares(ds: Dataset, cfg: ExperimentConfig) -> SplitPair:
    """train-sh (first) and test-sh (second)."""
    return split(ds, SPLIT_FRACTION, cfg.seed)


def policy_view(cfg: ExperimentConfig, ds: Dataset) -> Dataset:
    """The items the learned policy decides from."""
    return with_group_feature(ds) if cfg.group_feature else ds


def make_demos(
    cfg: ExperimentConfig, halves: SplitPair, epsilon: float
) -> Tuple[DemonstrationSet, DemonstrationSet]:
    """Training demonstrations on train-sh and held-out ones on test-sh."""
    common = dict(
        n=cfg.n_demos,
        epsilon=epsilon,
        constraint=cfg.constraint,
        metric_ids=cfg.metric_ids,
        workers=cfg.workers,
    )
    train_demos = synthesize_demos(halves.first, seed=cfg.seed, **common)
    test_demos = synthesize_demos(
        halves.first,
        seed=cfg.seed + TEST_DEMO_SEED_OFFSET,
        target=halves.second,
        **common,
    )
    return train_demos, test_demos


def fit(cfg: ExperimentConfig, train_sh: Dataset, demos: DemonstrationSet) -> TrainedModel:
    train_sh = policy_view(cfg, train_sh)
    report = train(demos, train_sh, cfg.train)
    union: Set[int] = support_union(
        report.final_theta,
        demos,
        train_sh,
        cfg.train.lam,
        cfg.metric_ids,
        alpha_floor=cfg.train.alpha_floor,
    )
    bound = generalization_gamma(len(union), len(demos))
    logger.info("support-vector union %d of %d demos; bound gamma %.3f", len(union), len(demos), bound)
    return TrainedModel(report=report, support=tuple(sorted(union)), bound_gamma=bound)


def evaluate(
    cfg: ExperimentConfig,
    report: TrainReport,
    bound_gamma: float,
    halves: SplitPair,
    train_demos: DemonstrationSet,
    test_demos: DemonstrationSet,
) -> EvaluationReport:
    return compare_methods(
        report.final_theta,
        policy_view(cfg, halves.first),
        policy_view(cfg, halves.second),
        train_demos,
        test_demos,
        cfg.metric_ids,
        alpha=report.learned_alpha,
        bound_gamma=bound_gamma,
        seed=cfg.seed,
    )


def epsilon_dir(root, epsilon: float) -> Path:
    return Path(root) / f"eps_{epsilon:g}"


def run_epsilon(cfg: ExperimentConfig, ds: Dataset, epsilon: float, out_dir) -> EvaluationReport:
    """Demos, training and evaluation for one ε; every artifact under out_dir."""
    out = Path(out_dir)
    halves = shares(ds, cfg)
    train_demos, test_demos = make_demos(cfg, halves, epsilon)
    write_demos(train_demos, out / "demos_train.jsonl")
    write_demos(test_demos, out / "demos_test.jsonl")

    model = fit(cfg, halves.first, train_demos)
    write_report(model.report, out / "train_report.json", extra=model.extra())

    result = evaluate(cfg, model.report, model.bound_gamma, halves, train_demos, test_demos)
    export_results(result, test_demos.profiles, out / "results")
    return result


def run_experiment(cfg: ExperimentConfig) -> List[EvaluationReport]:
    """ε sweep; the dataset cache and γ-vs-ε curve go to the workdir root,
    everything else to ``eps_<ε>/``."""
    ds = build_dataset(cfg)
    root = Path(cfg.paths.workdir)
    write_dataset(ds, root / "dataset.jsonl")
    reports = []
    for eps in cfg.epsilons:
        logger.info("epsilon %g", eps)
        reports.append(run_epsilon(cfg, ds, eps, epsilon_dir(root, eps)))
    export_gamma_curve(reports, root)
    return reports
