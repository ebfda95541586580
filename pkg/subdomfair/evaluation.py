"""Pareto dominance, γ-superhuman measurement and result export.

Dominance is weak and componentwise: a profile dominates another when it is
no worse in every metric. γ is the fraction of reference demonstrations a
model's profile dominates.
"""

import itertools
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .dataset import Dataset
from .demogen import DemonstrationSet, apply_thresholds, fit_base_scorer, postprocess
from .metrics import DecisionVector, MetricProfile, profile
from .policy import PolicyModel, hard_decisions, predict_proba
from .subdominance import AlphaVector
from .validation import ValidationError, ensure_valid, validate_shared_metrics

logger = logging.getLogger(__name__)

SUBDOMINANCE = "subdominance"
BASELINES = ("logistic", "post_proc_dp", "post_proc_eqodds")
# compared methods with no implementation here; reported as NA
UNAVAILABLE = ("mfopt", "fair_logloss_dp", "fair_logloss_eqodds")

COMPARISON_FILE = "table_comparison.csv"
GAMMA_TABLE_FILE = "table_gamma.csv"
GAMMA_CURVE_FILE = "gamma_vs_epsilon.csv"
NA = "NA"


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """Per-method test profiles and γ values for one ε."""

    method_profiles: Dict[str, MetricProfile]
    gamma: Dict[str, float]
    demo_profiles: Tuple[MetricProfile, ...]
    alpha: AlphaVector
    bound_gamma: float
    gamma_train: Dict[str, float] = field(default_factory=dict)
    epsilon: float = 0.0

    def __post_init__(self):
        errors = []
        for name, value in {**self.gamma, **self.gamma_train}.items():
            if not 0.0 <= value <= 1.0:
                errors.append(f"gamma for {name} must lie in [0, 1], got {value}")
        if not 0.0 <= self.bound_gamma <= 1.0:
            errors.append(f"bound_gamma must lie in [0, 1], got {self.bound_gamma}")
        profiles = list(self.method_profiles.values()) + list(self.demo_profiles)
        if profiles:
            errors += validate_shared_metrics(profiles[0].metric_ids, profiles)
        ensure_valid(errors)

    @property
    def metric_ids(self) -> Tuple[str, ...]:
        return next(iter(self.method_profiles.values())).metric_ids

    @property
    def methods(self) -> List[str]:
        return list(self.method_profiles)


def _check_pair(a: MetricProfile, b: MetricProfile) -> None:
    if a.metric_ids != b.metric_ids:
        raise ValidationError(
            [f"metric ids differ: {list(a.metric_ids)} vs {list(b.metric_ids)}"]
        )


def pareto_dominates(a: MetricProfile, b: MetricProfile) -> bool:
    """True iff a is no worse than b in every metric."""
    _check_pair(a, b)
    return bool(np.all(a.values <= b.values))


def _demo_matrix(model_profile: MetricProfile, demo_profiles: Sequence[MetricProfile]) -> np.ndarray:
    if not demo_profiles:
        raise ValidationError(["at least one demonstration profile is required"])
    ensure_valid(validate_shared_metrics(model_profile.metric_ids, demo_profiles))
    return np.vstack([p.values for p in demo_profiles])


def gamma_superhuman(
    model_profile: MetricProfile, demo_profiles: Sequence[MetricProfile]
) -> float:
    """Fraction of demonstrations weakly dominated by the model."""
    demos = _demo_matrix(model_profile, demo_profiles)
    dominated = np.all(model_profile.values <= demos, axis=1)
    return float(dominated.mean())


def per_metric_gamma(
    model_profile: MetricProfile, demo_profiles: Sequence[MetricProfile]
) -> np.ndarray:
    """Per metric, the fraction of demonstrations the model matches or beats."""
    demos = _demo_matrix(model_profile, demo_profiles)
    return (model_profile.values <= demos).mean(axis=0)


def evaluate_on_test(
    model: PolicyModel,
    test_sh: Dataset,
    demos_for_eval: DemonstrationSet,
    metric_ids: Sequence[str],
    alpha: Optional[AlphaVector] = None,
    bound_gamma: float = 0.0,
) -> EvaluationReport:
    """Report holding only the trained model's hard-decision test profile."""
    metric_ids = tuple(metric_ids)
    if demos_for_eval.metric_ids != metric_ids:
        raise ValidationError(
            [
                f"demonstrations carry metrics {list(demos_for_eval.metric_ids)}, "
                f"expected {list(metric_ids)}"
            ]
        )
    d = hard_decisions(model, test_sh.items, test_sh.ids)
    prof = profile(d, test_sh, metric_ids)
    demo_profiles = tuple(demos_for_eval.profiles)
    return EvaluationReport(
        method_profiles={SUBDOMINANCE: prof},
        gamma={SUBDOMINANCE: gamma_superhuman(prof, demo_profiles)},
        demo_profiles=demo_profiles,
        alpha=alpha if alpha is not None else AlphaVector(np.zeros(len(metric_ids))),
        bound_gamma=float(bound_gamma),
        epsilon=demos_for_eval.provenance.epsilon,
    )


def baseline_decisions(
    train_sh: Dataset, targets: Sequence[Dataset], seed: int
) -> List[Dict[str, DecisionVector]]:
    """Decisions on each target from the unconstrained scorer and its
    post-processed variants, all fit once on clean train-sh."""
    scorer = fit_base_scorer(train_sh)
    train_scores = predict_proba(scorer, train_sh.items)
    rules = {
        f"post_proc_{c}": postprocess(train_scores, train_sh.groups, train_sh.labels, c)
        for c in ("dp", "eqodds")
    }
    out = []
    for target in targets:
        scores = predict_proba(scorer, target.items)
        decisions = {"logistic": hard_decisions(scorer, target.items, target.ids)}
        for name, th in rules.items():
            decisions[name] = apply_thresholds(
                th, scores, target.groups, seed, item_ids=target.ids
            )
        out.append(decisions)
    return out


def compare_methods(
    model: PolicyModel,
    train_sh: Dataset,
    test_sh: Dataset,
    train_demos: DemonstrationSet,
    test_demos: DemonstrationSet,
    metric_ids: Sequence[str],
    alpha: Optional[AlphaVector] = None,
    bound_gamma: float = 0.0,
    seed: int = 0,
) -> EvaluationReport:
    """Full report: the trained model next to every baseline.

    ``gamma`` is measured on test-sh against ``test_demos``; ``gamma_train``
    on train-sh against the training demonstrations.
    """
    metric_ids = tuple(metric_ids)
    report = evaluate_on_test(model, test_sh, test_demos, metric_ids, alpha, bound_gamma)
    train_profiles = list(train_demos.profiles)

    profiles = dict(report.method_profiles)
    gamma = dict(report.gamma)
    gamma_train = {
        SUBDOMINANCE: gamma_superhuman(
            profile(hard_decisions(model, train_sh.items, train_sh.ids), train_sh, metric_ids),
            train_profiles,
        )
    }

    on_test, on_train = baseline_decisions(train_sh, (test_sh, train_sh), seed)
    for name in BASELINES:
        profiles[name] = profile(on_test[name], test_sh, metric_ids)
        gamma[name] = gamma_superhuman(profiles[name], report.demo_profiles)
        gamma_train[name] = gamma_superhuman(
            profile(on_train[name], train_sh, metric_ids), train_profiles
        )
        logger.info("%s: gamma_test=%.3f gamma_train=%.3f", name, gamma[name], gamma_train[name])

    return replace(
        report, method_profiles=profiles, gamma=gamma, gamma_train=gamma_train
    )


def comparison_table(report: EvaluationReport) -> pd.DataFrame:
    """Method × metric table with the learned α row and per-metric γ row."""
    ids = list(report.metric_ids)
    model = report.method_profiles.get(SUBDOMINANCE, next(iter(report.method_profiles.values())))
    rows = [
        ["alpha", *report.alpha.alphas.tolist(), None],
        [
            "gamma",
            *per_metric_gamma(model, report.demo_profiles).tolist(),
            report.gamma.get(SUBDOMINANCE),
        ],
    ]
    for name, prof in report.method_profiles.items():
        rows.append([name, *prof.values.tolist(), report.gamma.get(name)])
    return pd.DataFrame(rows, columns=["method", *ids, "gamma_all"])


def gamma_table(report: EvaluationReport) -> pd.DataFrame:
    rows = [
        [name, report.gamma_train.get(name), report.gamma.get(name)]
        for name in report.method_profiles
    ]
    rows += [[name, None, None] for name in UNAVAILABLE]
    return pd.DataFrame(rows, columns=["method", "gamma_train", "gamma_test"])


def scatter_frame(
    report: EvaluationReport,
    demo_profiles: Sequence[MetricProfile],
    metric_a: str,
    metric_b: str,
) -> pd.DataFrame:
    """Demo points, method points and the margin boundaries 1/α for two metrics."""
    ids = report.metric_ids
    ia, ib = ids.index(metric_a), ids.index(metric_b)
    rows = [
        ["demo", f"demo_{j}", p.values[ia], p.values[ib]]
        for j, p in enumerate(demo_profiles)
    ]
    rows += [
        ["method", name, p.values[ia], p.values[ib]]
        for name, p in report.method_profiles.items()
    ]
    margins = report.alpha.margins()
    rows.append(["margin", "boundary", margins[ia], margins[ib]])
    return pd.DataFrame(rows, columns=["kind", "label", "x", "y"])


def _write(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, na_rep=NA, lineterminator="\n")
    return path


def export_gamma_curve(
    reports: Sequence[EvaluationReport], out_dir
) -> Path:
    """One row per ε, in the given order."""
    if not reports:
        raise ValidationError(["no evaluation reports to export"])
    rows = [
        [
            r.epsilon,
            r.gamma.get(SUBDOMINANCE),
            r.gamma_train.get(SUBDOMINANCE),
            r.bound_gamma,
        ]
        for r in reports
    ]
    frame = pd.DataFrame(rows, columns=["epsilon", "gamma_test", "gamma_train", "bound_gamma"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _write(frame, out / GAMMA_CURVE_FILE)


def export_results(
    report: EvaluationReport,
    demo_profiles: Sequence[MetricProfile],
    out_dir,
    sweep: Sequence[EvaluationReport] = (),
) -> List[Path]:
    """Write the comparison tables and per-metric-pair scatter files.

    With ``sweep`` given, the γ-vs-ε curve is written as well.
    """
    if not demo_profiles:
        raise ValidationError(["cannot export results without demonstration profiles"])
    ensure_valid(validate_shared_metrics(report.metric_ids, demo_profiles))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _write(comparison_table(report), out / COMPARISON_FILE),
        _write(gamma_table(report), out / GAMMA_TABLE_FILE),
    ]
    for a, b in itertools.combinations(report.metric_ids, 2):
        frame = scatter_frame(report, demo_profiles, a, b)
        written.append(_write(frame, out / f"scatter_{a}_{b}.csv"))
    if sweep:
        written.append(export_gamma_curve(sweep, out))

    logger.info("wrote %d result files to %s", len(written), out)
    return written
