"""Predictive-performance and group-fairness violation measures.

Every measure is computed from exact integer confusion tallies per group,
followed by one floating division per rate. A rate whose denominator is zero
(an empty group or stratum) is defined as 0, so every measure is total and
lies in [0, 1].
"""

from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from .validation import (
    ValidationError,
    ensure_valid,
    validate_decisions,
    validate_metric_ids,
)

DEFAULT_METRICS = ("err", "d_dp", "d_eqodds", "d_prp")


@dataclass(frozen=True, eq=False)
class DecisionVector:
    """One binary decision per item, keyed by dataset item ids."""

    values: np.ndarray
    item_ids: np.ndarray

    def __post_init__(self):
        values = np.array(self.values).astype(np.int8, copy=False)
        item_ids = np.array(self.item_ids).astype(np.int64, copy=False)
        ensure_valid(validate_decisions(values, item_ids))
        values.setflags(write=False)
        item_ids.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "item_ids", item_ids)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GroupCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class GroupConfusion:
    """Confusion counts for group a = 0 and group a = 1."""

    group0: GroupCounts
    group1: GroupCounts

    def group(self, g: int) -> GroupCounts:
        return self.group1 if g else self.group0

    @property
    def total(self) -> int:
        return self.group0.total + self.group1.total


@dataclass(frozen=True, eq=False)
class MetricProfile:
    """The K-vector f(ŷ, y, a) in a fixed metric order."""

    metric_ids: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        ids = tuple(self.metric_ids)
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        errors = validate_metric_ids(ids, METRICS)
        if values.shape[0] != len(ids):
            errors.append(f"{values.shape[0]} values for {len(ids)} metrics")
        elif not ((values >= 0.0) & (values <= 1.0)).all():
            errors.append(f"metric values must lie in [0, 1], got {values.tolist()}")
        ensure_valid(errors)
        values.setflags(write=False)
        object.__setattr__(self, "metric_ids", ids)
        object.__setattr__(self, "values", values)

    def __getitem__(self, metric_id: str) -> float:
        return float(self.values[self.metric_ids.index(metric_id)])

    def to_record(self) -> dict:
        return {"metric_ids": list(self.metric_ids), "values": self.values.tolist()}

    @classmethod
    def from_record(cls, record: dict) -> "MetricProfile":
        return cls(metric_ids=tuple(record["metric_ids"]), values=record["values"])


def _rate(num: int, den: int) -> float:
    return num / den if den else 0.0


def tally(yhat: np.ndarray, y: np.ndarray, a: np.ndarray) -> GroupConfusion:
    """Exact confusion counts per group from aligned 0/1 vectors."""
    codes = 4 * np.asarray(a, dtype=np.int64) + 2 * np.asarray(y, dtype=np.int64)
    codes += np.asarray(yhat, dtype=np.int64)
    c = np.bincount(codes, minlength=8).tolist()
    # code = 4a + 2y + ŷ
    return GroupConfusion(
        group0=GroupCounts(tp=c[3], fp=c[1], tn=c[0], fn=c[2]),
        group1=GroupCounts(tp=c[7], fp=c[5], tn=c[4], fn=c[6]),
    )


def _err(cm: GroupConfusion) -> float:
    wrong = cm.group0.fp + cm.group0.fn + cm.group1.fp + cm.group1.fn
    return _rate(wrong, cm.total)


def _positive_rate(g: GroupCounts) -> float:
    return _rate(g.tp + g.fp, g.total)


def _tpr(g: GroupCounts) -> float:
    return _rate(g.tp, g.tp + g.fn)


def _fpr(g: GroupCounts) -> float:
    return _rate(g.fp, g.fp + g.tn)


def _fnr(g: GroupCounts) -> float:
    return _rate(g.fn, g.tp + g.fn)


def _ppv(g: GroupCounts) -> float:
    return _rate(g.tp, g.tp + g.fp)


def _positive_given_negative_decision(g: GroupCounts) -> float:
    return _rate(g.fn, g.fn + g.tn)


def _gap(cm: GroupConfusion, rate: Callable[[GroupCounts], float]) -> float:
    return abs(rate(cm.group1) - rate(cm.group0))


def _d_dp(cm: GroupConfusion) -> float:
    return _gap(cm, _positive_rate)


def _d_eqodds(cm: GroupConfusion) -> float:
    return max(_gap(cm, _tpr), _gap(cm, _fpr))


def _d_prp(cm: GroupConfusion) -> float:
    return max(_gap(cm, _ppv), _gap(cm, _positive_given_negative_decision))


def _d_fnr(cm: GroupConfusion) -> float:
    return _gap(cm, _fnr)


def _d_fpr(cm: GroupConfusion) -> float:
    return _gap(cm, _fpr)


METRICS: Dict[str, Callable[[GroupConfusion], float]] = {
    "err": _err,
    "d_dp": _d_dp,
    "d_eqodds": _d_eqodds,
    "d_prp": _d_prp,
    "d_fnr": _d_fnr,
    "d_fpr": _d_fpr,
}


def _resolve(d: DecisionVector, ds) -> Tuple[np.ndarray, np.ndarray]:
    pos = ds.positions_of(d.item_ids)
    return ds.labels[pos], ds.groups[pos]


def _nonempty(d: DecisionVector) -> None:
    if len(d) == 0:
        raise ValidationError(["decision vector is empty"])


def confusion_counts(d: DecisionVector, ds) -> GroupConfusion:
    y, a = _resolve(d, ds)
    return tally(d.values, y, a)


def _single(metric_id: str):
    fn = METRICS[metric_id]

    def metric(d: DecisionVector, ds) -> float:
        _nonempty(d)
        return fn(confusion_counts(d, ds))

    metric.__name__ = metric_id
    return metric


prediction_error = _single("err")
d_dp = _single("d_dp")
d_eqodds = _single("d_eqodds")
d_prp = _single("d_prp")
d_fnr = _single("d_fnr")
d_fpr = _single("d_fpr")


def profile_values(
    yhat: np.ndarray, y: np.ndarray, a: np.ndarray, metric_ids: Sequence[str]
) -> np.ndarray:
    """Metric vector from aligned arrays; the hot path of training."""
    if len(yhat) == 0:
        raise ValidationError(["decision vector is empty"])
    cm = tally(yhat, y, a)
    return np.array([METRICS[k](cm) for k in metric_ids], dtype=np.float64)


def profile(d: DecisionVector, ds, metric_ids: Sequence[str]) -> MetricProfile:
    """MetricProfile of ``d`` against the dataset's labels and groups."""
    ensure_valid(validate_metric_ids(metric_ids, METRICS))
    y, a = _resolve(d, ds)
    return MetricProfile(
        metric_ids=tuple(metric_ids),
        values=profile_values(d.values, y, a, metric_ids),
    )
