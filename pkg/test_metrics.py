#!/usr/bin/env python3
"""Test performance and fairness measures against hand tallies."""

import numpy as np
import pytest

from subdomfair.dataset import Dataset
from subdomfair.metrics import (
    METRICS,
    DecisionVector,
    MetricProfile,
    confusion_counts,
    d_dp,
    d_eqodds,
    d_fnr,
    d_fpr,
    d_prp,
    prediction_error,
    profile,
)
from subdomfair.validation import UnresolvedItemError, ValidationError


def make_case(yhat, y, a):
    m = len(y)
    ds = Dataset(items=np.zeros((m, 1)), labels=y, groups=a, ids=np.arange(m))
    return DecisionVector(values=yhat, item_ids=np.arange(m)), ds


def test_confusion_counts_hand_tally():
    d, ds = make_case([1, 0, 1, 0], [1, 1, 0, 0], [1, 1, 0, 0])
    cm = confusion_counts(d, ds)
    assert (cm.group1.tp, cm.group1.fn, cm.group1.fp, cm.group1.tn) == (1, 1, 0, 0)
    assert (cm.group0.tp, cm.group0.fn, cm.group0.fp, cm.group0.tn) == (0, 0, 1, 1)
    assert cm.total == 4


def test_confusion_counts_perfect_and_empty_group():
    d, ds = make_case([1, 0, 1, 0], [1, 0, 1, 0], [1, 1, 0, 0])
    cm = confusion_counts(d, ds)
    assert cm.group0.fp == cm.group0.fn == cm.group1.fp == cm.group1.fn == 0

    d, ds = make_case([1, 0, 1], [1, 1, 0], [1, 1, 1])
    assert confusion_counts(d, ds).group0.total == 0


def test_confusion_counts_unresolved_id():
    _, ds = make_case([1, 0], [1, 0], [0, 1])
    d = DecisionVector(values=[1, 0], item_ids=[0, 7])
    with pytest.raises(UnresolvedItemError):
        confusion_counts(d, ds)


def test_prediction_error_examples():
    y = [1, 0, 1, 1]
    assert prediction_error(*make_case(y, y, [0, 1, 0, 1])) == 0.0
    assert prediction_error(*make_case([0, 1, 0, 0], y, [0, 1, 0, 1])) == 1.0
    assert prediction_error(*make_case([1, 0, 1, 0], [1, 1, 1, 1], [0, 1, 0, 1])) == 0.5


def test_d_dp_examples():
    y = [0, 0, 0, 0]
    assert d_dp(*make_case([1, 0, 1, 0], y, [1, 1, 0, 0])) == 0.0
    assert d_dp(*make_case([1, 1, 0, 0], y, [1, 1, 0, 0])) == 1.0
    # empty group 0 has rate 0 by convention
    assert d_dp(*make_case([1, 1, 1, 1], y, [1, 1, 1, 1])) == 1.0


def test_d_eqodds_examples():
    assert d_eqodds(*make_case([1, 0, 1, 0], [1, 0, 1, 0], [1, 1, 0, 0])) == 0.0
    assert d_eqodds(*make_case([1, 0, 1, 0], [1, 1, 1, 1], [1, 1, 0, 0])) == 0.0
    assert d_eqodds(*make_case([1, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, 0])) == 1.0


def test_d_prp_examples():
    assert d_prp(*make_case([1, 0, 1, 0], [1, 0, 1, 0], [1, 1, 0, 0])) == 0.0
    assert d_prp(*make_case([1, 1, 1, 1], [1, 0, 1, 0], [1, 1, 0, 0])) == 0.0
    assert d_prp(*make_case([1, 1, 0, 0], [1, 0, 0, 1], [1, 0, 1, 0])) == 1.0


def test_d_fnr_and_d_fpr_examples():
    y = [1, 0, 1, 0]
    assert d_fnr(*make_case(y, y, [1, 1, 0, 0])) == 0.0
    assert d_fpr(*make_case(y, y, [1, 1, 0, 0])) == 0.0
    assert d_fnr(*make_case([0, 1, 1, 1], [1, 1, 1, 1], [1, 1, 0, 0])) == 0.5
    assert d_fpr(*make_case([1, 0, 0, 0], [0, 0, 0, 0], [1, 1, 0, 0])) == 0.5


def test_empty_decision_vector_is_rejected():
    _, ds = make_case([1], [1], [1])
    d = DecisionVector(values=np.zeros(0, dtype=np.int8), item_ids=np.zeros(0, dtype=np.int64))
    for metric in (prediction_error, d_dp, d_eqodds, d_prp, d_fnr, d_fpr):
        with pytest.raises(ValidationError):
            metric(d, ds)


def _rate(num, den):
    return num / den if den else 0.0


def brute_force(yhat, y, a):
    """Independent per-item tally of every measure."""
    c = {}
    for g in (0, 1):
        for key in ("tp", "fp", "tn", "fn", "n"):
            c[g, key] = 0
    for p, t, g in zip(yhat, y, a):
        c[g, "n"] += 1
        if p == 1 and t == 1:
            c[g, "tp"] += 1
        elif p == 1 and t == 0:
            c[g, "fp"] += 1
        elif p == 0 and t == 0:
            c[g, "tn"] += 1
        else:
            c[g, "fn"] += 1

    def rates(g):
        tp, fp, tn, fn, n = (c[g, k] for k in ("tp", "fp", "tn", "fn", "n"))
        return {
            "pos": _rate(tp + fp, n),
            "tpr": _rate(tp, tp + fn),
            "fpr": _rate(fp, fp + tn),
            "fnr": _rate(fn, tp + fn),
            "ppv": _rate(tp, tp + fp),
            "npv_pos": _rate(fn, fn + tn),
        }

    r0, r1 = rates(0), rates(1)
    wrong = sum(1 for p, t in zip(yhat, y) if p != t)
    return {
        "err": wrong / len(y),
        "d_dp": abs(r1["pos"] - r0["pos"]),
        "d_eqodds": max(abs(r1["tpr"] - r0["tpr"]), abs(r1["fpr"] - r0["fpr"])),
        "d_prp": max(abs(r1["ppv"] - r0["ppv"]), abs(r1["npv_pos"] - r0["npv_pos"])),
        "d_fnr": abs(r1["fnr"] - r0["fnr"]),
        "d_fpr": abs(r1["fpr"] - r0["fpr"]),
    }


def test_metrics_equal_brute_force_tallies():
    rng = np.random.default_rng(2024)
    ids = tuple(METRICS)
    for _ in range(500):
        m = int(rng.integers(1, 51))
        yhat, y, a = (rng.integers(0, 2, m).tolist() for _ in range(3))
        d, ds = make_case(yhat, y, a)
        expected = brute_force(yhat, y, a)
        prof = profile(d, ds, ids)
        for k in ids:
            assert prof[k] == expected[k]
            assert 0.0 <= prof[k] <= 1.0


def test_metric_symmetries():
    rng = np.random.default_rng(5)
    ids = tuple(METRICS)
    diff_ids = [k for k in ids if k != "err"]
    for _ in range(100):
        m = int(rng.integers(2, 40))
        yhat, y, a = (rng.integers(0, 2, m) for _ in range(3))
        base = profile(*make_case(yhat, y, a), ids)

        perm = rng.permutation(m)
        permuted = profile(*make_case(yhat[perm], y[perm], a[perm]), ids)
        assert permuted.values.tolist() == base.values.tolist()

        swapped = profile(*make_case(yhat, y, 1 - a), ids)
        for k in diff_ids:
            assert swapped[k] == pytest.approx(base[k], abs=1e-15)
        assert swapped["err"] == base["err"]

        relabeled = profile(*make_case(yhat, 1 - y, a), ("d_dp",))
        assert relabeled["d_dp"] == base["d_dp"]


def test_profile_order_and_unknown_metric():
    d, ds = make_case([1, 0, 1, 1], [1, 0, 0, 1], [0, 0, 1, 1])
    single = profile(d, ds, ["err"])
    pair = profile(d, ds, ["err", "d_dp"])
    assert single.values[0] == pair.values[0]
    with pytest.raises(ValidationError, match="unknown"):
        profile(d, ds, ["err", "accuracy"])


def test_metric_profile_validation_and_record():
    prof = MetricProfile(metric_ids=("err", "d_dp"), values=[0.25, 0.5])
    assert prof["d_dp"] == 0.5
    assert MetricProfile.from_record(prof.to_record()).values.tolist() == [0.25, 0.5]
    with pytest.raises(ValidationError):
        MetricProfile(metric_ids=("err", "err"), values=[0.1, 0.2])
    with pytest.raises(ValidationError):
        MetricProfile(metric_ids=("err",), values=[1.5])
