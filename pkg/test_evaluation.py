#!/usr/bin/env python3
"""Test Pareto dominance, γ measurement and exported result files."""

import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from subdomfair.dataset import generate_synthetic, split
from subdomfair.demogen import synthesize_demos
from subdomfair.evaluation import (
    BASELINES,
    COMPARISON_FILE,
    GAMMA_CURVE_FILE,
    GAMMA_TABLE_FILE,
    SUBDOMINANCE,
    UNAVAILABLE,
    EvaluationReport,
    compare_methods,
    comparison_table,
    evaluate_on_test,
    export_gamma_curve,
    export_results,
    gamma_superhuman,
    pareto_dominates,
    per_metric_gamma,
)
from subdomfair.metrics import DEFAULT_METRICS, MetricProfile
from subdomfair.policy import PolicyModel, init_policy
from subdomfair.subdominance import AlphaVector
from subdomfair.validation import ValidationError

PAIR = ("err", "d_dp")


def prof(*values, ids=PAIR):
    return MetricProfile(ids, list(values))


def four_metric_report(alpha=(4.0, 2.0, 0.0, 1.0)):
    demos = tuple(
        MetricProfile(DEFAULT_METRICS, v)
        for v in ([0.2, 0.1, 0.2, 0.3], [0.3, 0.05, 0.1, 0.2], [0.25, 0.2, 0.3, 0.1])
    )
    methods = {
        SUBDOMINANCE: MetricProfile(DEFAULT_METRICS, [0.2, 0.05, 0.1, 0.1]),
        "logistic": MetricProfile(DEFAULT_METRICS, [0.15, 0.3, 0.25, 0.2]),
    }
    return EvaluationReport(
        method_profiles=methods,
        gamma={name: gamma_superhuman(p, demos) for name, p in methods.items()},
        demo_profiles=demos,
        alpha=AlphaVector(list(alpha)),
        bound_gamma=0.5,
        gamma_train={SUBDOMINANCE: 1.0, "logistic": 0.0},
        epsilon=0.2,
    )


def test_pareto_dominates_examples():
    a = prof(0.1, 0.2)
    assert pareto_dominates(a, a)
    b = prof(0.2, 0.1)
    assert not pareto_dominates(a, b)
    assert not pareto_dominates(b, a)
    assert pareto_dominates(prof(0.1, 0.1), prof(0.2, 0.1))
    with pytest.raises(ValidationError):
        pareto_dominates(a, prof(0.1, 0.2, ids=("err", "d_prp")))


def test_pareto_dominates_is_a_partial_order():
    rng = np.random.default_rng(0)
    def grid():
        return MetricProfile(PAIR, rng.integers(0, 4, 2) / 4.0)

    for _ in range(300):
        a, b, c = grid(), grid(), grid()
        assert pareto_dominates(a, a)
        if pareto_dominates(a, b) and pareto_dominates(b, a):
            assert a.values.tolist() == b.values.tolist()
        if pareto_dominates(a, b) and pareto_dominates(b, c):
            assert pareto_dominates(a, c)


def test_gamma_superhuman_examples():
    demos = [prof(0.2, 0.2), prof(0.05, 0.3), prof(0.1, 0.1)]
    assert gamma_superhuman(prof(0.1, 0.1), demos) == pytest.approx(2 / 3)
    assert gamma_superhuman(prof(0.9, 0.9), demos) == 0.0
    assert gamma_superhuman(prof(0.3, 0.3), [prof(0.3, 0.3)] * 3) == 1.0
    with pytest.raises(ValidationError):
        gamma_superhuman(prof(0.1, 0.1), [])


def test_gamma_superhuman_is_monotone():
    rng = np.random.default_rng(1)
    for _ in range(300):
        demos = [MetricProfile(PAIR, rng.random(2)) for _ in range(6)]
        model = rng.random(2)
        better = model.copy()
        better[int(rng.integers(0, 2))] *= rng.random()
        assert gamma_superhuman(MetricProfile(PAIR, better), demos) >= gamma_superhuman(
            MetricProfile(PAIR, model), demos
        )


def test_strictly_worse_demo_has_zero_gamma():
    assert gamma_superhuman(prof(0.4, 0.3), [prof(0.2, 0.1)]) == 0.0


def test_per_metric_gamma():
    demos = [prof(0.2, 0.2), prof(0.05, 0.3), prof(0.1, 0.1)]
    assert per_metric_gamma(prof(0.1, 0.25), demos).tolist() == pytest.approx([2 / 3, 1 / 3])


@pytest.fixture(scope="module")
def split_case():
    ds = generate_synthetic(2, 800, 4, 0.4, 0.05)
    halves = split(ds, 0.5, 0)
    train_demos = synthesize_demos(halves.first, 3, 0.1, "dp", seed=0, metric_ids=DEFAULT_METRICS)
    test_demos = synthesize_demos(
        halves.first, 3, 0.1, "dp", seed=10_000, metric_ids=DEFAULT_METRICS, target=halves.second
    )
    return halves.first, halves.second, train_demos, test_demos


def test_evaluate_on_test_zero_model(split_case):
    _, test_sh, _, test_demos = split_case
    report = evaluate_on_test(init_policy(test_sh.n_features), test_sh, test_demos, DEFAULT_METRICS)
    assert report.methods == [SUBDOMINANCE]
    assert report.method_profiles[SUBDOMINANCE]["err"] == pytest.approx(
        float(np.mean(test_sh.labels == 0))
    )
    assert report.method_profiles[SUBDOMINANCE]["d_dp"] == 0.0
    np.testing.assert_array_equal(report.alpha.alphas, 0.0)

    again = evaluate_on_test(init_policy(test_sh.n_features), test_sh, test_demos, DEFAULT_METRICS)
    assert again.gamma == report.gamma


def test_evaluate_on_test_rejects_mismatch(split_case):
    _, test_sh, _, test_demos = split_case
    with pytest.raises(ValidationError):
        evaluate_on_test(init_policy(test_sh.n_features), test_sh, test_demos, PAIR)
    with pytest.raises(ValidationError):
        evaluate_on_test(init_policy(2), test_sh, test_demos, DEFAULT_METRICS)


def test_zero_profile_has_gamma_one(split_case):
    _, _, _, test_demos = split_case
    zero = MetricProfile(DEFAULT_METRICS, np.zeros(len(DEFAULT_METRICS)))
    assert gamma_superhuman(zero, test_demos.profiles) == 1.0


def test_compare_methods_reports_every_baseline(split_case):
    train_sh, test_sh, train_demos, test_demos = split_case
    model = PolicyModel(theta=np.linspace(-0.5, 0.5, train_sh.n_features))
    report = compare_methods(
        model, train_sh, test_sh, train_demos, test_demos, DEFAULT_METRICS,
        alpha=AlphaVector([1.0, 2.0, 3.0, 4.0]), bound_gamma=0.25, seed=0,
    )
    assert report.methods == [SUBDOMINANCE, *BASELINES]
    assert set(report.gamma) == set(report.gamma_train) == set(report.methods)
    assert all(0.0 <= g <= 1.0 for g in report.gamma.values())
    assert report.bound_gamma == 0.25
    assert report.epsilon == pytest.approx(0.1)


def test_evaluation_report_rejects_out_of_range_gamma():
    p = MetricProfile(PAIR, [0.1, 0.1])
    with pytest.raises(ValidationError):
        EvaluationReport({SUBDOMINANCE: p}, {SUBDOMINANCE: 1.5}, (p,), AlphaVector([0.0, 0.0]), 0.0)


def test_comparison_table_shape():
    table = comparison_table(four_metric_report())
    assert table.shape == (4, 6)
    assert table["method"].tolist() == ["alpha", "gamma", SUBDOMINANCE, "logistic"]
    assert table.columns.tolist() == ["method", *DEFAULT_METRICS, "gamma_all"]
    assert table.iloc[0, 1:5].tolist() == [4.0, 2.0, 0.0, 1.0]


def test_export_results_files():
    report = four_metric_report()
    with tempfile.TemporaryDirectory() as tmp:
        written = export_results(report, report.demo_profiles, tmp)
        names = sorted(p.name for p in written)
        assert COMPARISON_FILE in names and GAMMA_TABLE_FILE in names
        assert len([n for n in names if n.startswith("scatter_")]) == 6

        scatter = pd.read_csv(Path(tmp) / "scatter_err_d_dp.csv")
        assert scatter.columns.tolist() == ["kind", "label", "x", "y"]
        boundary = scatter[scatter["kind"] == "margin"].iloc[0]
        assert boundary["x"] == 0.25
        assert boundary["y"] == 0.5
        assert (scatter["kind"] == "demo").sum() == 3

        text = (Path(tmp) / "scatter_d_eqodds_d_prp.csv").read_text()
        assert text.splitlines()[-1] == "margin,boundary,inf,1.0"

        gamma = (Path(tmp) / GAMMA_TABLE_FILE).read_text().splitlines()
        assert gamma[0] == "method,gamma_train,gamma_test"
        assert gamma[-len(UNAVAILABLE):] == [f"{name},NA,NA" for name in UNAVAILABLE]

        comparison = (Path(tmp) / COMPARISON_FILE).read_text().splitlines()
        assert comparison[1].endswith(",NA")


def test_export_results_rejects_empty_demos():
    with tempfile.TemporaryDirectory() as tmp:
        with pytest.raises(ValidationError):
            export_results(four_metric_report(), [], tmp)


def test_export_gamma_curve_rows_follow_input_order():
    first = four_metric_report()
    second = EvaluationReport(
        method_profiles=first.method_profiles,
        gamma=first.gamma,
        demo_profiles=first.demo_profiles,
        alpha=first.alpha,
        bound_gamma=0.0,
        gamma_train=first.gamma_train,
        epsilon=0.0,
    )
    with tempfile.TemporaryDirectory() as tmp:
        path = export_gamma_curve([second, first], tmp)
        assert path.name == GAMMA_CURVE_FILE
        frame = pd.read_csv(path)
        assert frame.columns.tolist() == ["epsilon", "gamma_test", "gamma_train", "bound_gamma"]
        assert frame["epsilon"].tolist() == [0.0, 0.2]
        assert frame["bound_gamma"].tolist() == [0.0, 0.5]
