"""Tabular fairness datasets: loading, synthesis, splitting and noise."""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence, Set, Tuple

import numpy as np
import pandas as pd

from .validation import (
    EmptyDatasetError,
    UnresolvedItemError,
    ValidationError,
    ensure_valid,
    validate_dataset_arrays,
    validate_probability,
)

logger = logging.getLogger(__name__)

INTERCEPT = "intercept"
GROUP_FEATURE = "group"
SCHEMAS = ("adult", "compas")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Items X (M×L), binary labels y, binary groups a and stable ids.

    Arrays are copied on construction and made read-only.
    """

    items: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    ids: np.ndarray
    feature_names: Tuple[str, ...] = ()
    name: str = "dataset"

    def __post_init__(self):
        items = np.array(self.items, dtype=np.float64)
        labels = np.array(self.labels).astype(np.int8, copy=False)
        groups = np.array(self.groups).astype(np.int8, copy=False)
        ids = np.array(self.ids).astype(np.int64, copy=False)
        if items.ndim == 1:
            items = items.reshape(-1, 1)

        ensure_valid(validate_dataset_arrays(items, labels, groups, ids))

        names = tuple(self.feature_names) or tuple(
            f"x{j}" for j in range(items.shape[1])
        )
        if len(names) != items.shape[1]:
            raise ValidationError(
                [f"{len(names)} feature names for {items.shape[1]} features"]
            )

        object.__setattr__(self, "items", _frozen(items))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "groups", _frozen(groups))
        object.__setattr__(self, "ids", _frozen(ids))
        object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return self.items.shape[0]

    def __repr__(self):
        return (
            f"Dataset(name={self.name!r}, M={len(self)}, L={self.n_features})"
        )

    @property
    def n_features(self) -> int:
        return self.items.shape[1]

    @cached_property
    def _id_order(self) -> np.ndarray:
        return np.argsort(self.ids, kind="stable")

    def id_set(self) -> Set[int]:
        return set(self.ids.tolist())

    def positions_of(self, item_ids: Sequence[int]) -> np.ndarray:
        """Row positions of ``item_ids``; raises if any id is unknown."""
        wanted = np.asarray(item_ids, dtype=np.int64)
        sorted_ids = self.ids[self._id_order]
        idx = np.searchsorted(sorted_ids, wanted)
        idx = np.clip(idx, 0, len(sorted_ids) - 1)
        found = sorted_ids[idx] == wanted
        if not found.all():
            missing = wanted[~found]
            raise UnresolvedItemError(
                f"{missing.size} item ids not in {self.name} "
                f"(first: {missing[:3].tolist()})"
            )
        return self._id_order[idx]

    def subset(self, positions: Sequence[int], name: str = "") -> "Dataset":
        positions = np.asarray(positions, dtype=np.int64)
        return Dataset(
            items=self.items[positions],
            labels=self.labels[positions],
            groups=self.groups[positions],
            ids=self.ids[positions],
            feature_names=self.feature_names,
            name=name or self.name,
        )

    def base_rates(self) -> dict:
        """Label and group base rates, as printed by ``prepare``."""
        return {
            "label_rate": float(self.labels.mean()),
            "group_rate": float(self.groups.mean()),
            "label_rate_group0": _safe_mean(self.labels[self.groups == 0]),
            "label_rate_group1": _safe_mean(self.labels[self.groups == 1]),
        }


def _safe_mean(values: np.ndarray) -> float:
    return float(values.mean()) if values.size else 0.0


@dataclass(frozen=True)
class SplitPair:
    """Disjoint partition of a parent dataset."""

    first: Dataset
    second: Dataset
    seed: int = field(default=0)


def _round_count(fraction: float, m: int) -> int:
    # half-up rounding; Python's round() is half-to-even
    return int(np.floor(fraction * m + 0.5))


def encode_frame(
    frame: pd.DataFrame, numeric: Sequence[str], categorical: Sequence[str]
) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """One-hot categoricals, standardize numerics, append the intercept."""
    parts = []
    if numeric:
        num = frame[list(numeric)].astype(np.float64)
        std = num.std(ddof=0).replace(0.0, 1.0)
        parts.append((num - num.mean()) / std)
    if categorical:
        cats = frame[list(categorical)].astype(str)
        parts.append(pd.get_dummies(cats, prefix=list(categorical), dtype=np.float64))

    encoded = pd.concat(parts, axis=1) if parts else pd.DataFrame(index=frame.index)
    encoded[INTERCEPT] = 1.0
    return encoded.to_numpy(dtype=np.float64), tuple(encoded.columns)


def load_tabular(
    path: str,
    schema: str,
    include_protected: bool = False,
    compas_race: str = "two_largest",
) -> Dataset:
    """Load and preprocess a raw Adult or COMPAS CSV into a Dataset."""
    from .loaders import adult, compas, read_raw

    if schema not in SCHEMAS:
        raise ValidationError([f"unknown schema {schema!r}; expected one of {SCHEMAS}"])

    raw = read_raw(path)
    if schema == "adult":
        table = adult.prepare(raw, include_protected=include_protected)
    else:
        table = compas.prepare(
            raw, include_protected=include_protected, race_policy=compas_race
        )

    if table.frame.empty:
        raise EmptyDatasetError([f"{path}: no rows left after filtering"])

    items, names = encode_frame(table.frame, table.numeric, table.categorical)
    ds = Dataset(
        items=items,
        labels=table.labels,
        groups=table.groups,
        ids=table.frame.index.to_numpy(),
        feature_names=names,
        name=schema,
    )
    logger.info(
        "loaded %s: M=%d L=%d (dropped %d rows)",
        schema, len(ds), ds.n_features, len(raw) - len(ds),
    )
    return ds


def generate_synthetic(
    seed: int,
    m: int,
    l: int,
    group_rate: float,
    flip_rate: float,
    shift: float = 2.13,
    lead_weight: float = 1.78,
    label_noise: float = 0.55,
    threshold: float = 1.18,
) -> Dataset:
    """Deterministic synthetic benchmark with group-dependent base rates.

    The first ``l - 1`` columns are standardized Gaussian features whose
    first coordinate is shifted by ``shift`` for group 1; the last column is
    the intercept. A label is 1 when the raw score
    ``lead_weight·z_0 + Σ_{j≥1} (−1)^j z_j / (j + 1) + label_noise·e`` exceeds
    ``threshold``, e standard normal, and is then flipped with probability
    ``flip_rate``.
    """
    errors = []
    if m < 2:
        errors.append(f"m must be at least 2, got {m}")
    if l < 1:
        errors.append(f"l must be at least 1, got {l}")
    errors += validate_probability("group_rate", group_rate)
    errors += validate_probability("flip_rate", flip_rate)
    if not label_noise >= 0:
        errors.append(f"label_noise must be >= 0, got {label_noise}")
    ensure_valid(errors)

    rng = np.random.default_rng(seed)
    groups = (rng.random(m) < group_rate).astype(np.int8)

    raw = rng.standard_normal((m, l - 1))
    j = np.arange(l - 1)
    weights = (-1.0) ** j / (j + 1)
    if l > 1:
        raw[:, 0] += shift * groups
        weights[0] = lead_weight
    score = raw @ weights + label_noise * rng.standard_normal(m)
    labels = (score > threshold).astype(np.int8)

    flips = rng.random(m) < flip_rate
    labels = np.where(flips, 1 - labels, labels).astype(np.int8)

    std = raw.std(axis=0)
    std[std == 0] = 1.0
    features = (raw - raw.mean(axis=0)) / std
    items = np.hstack([features, np.ones((m, 1))])
    names = tuple(f"x{j}" for j in range(l - 1)) + (INTERCEPT,)

    return Dataset(
        items=items,
        labels=labels,
        groups=groups,
        ids=np.arange(m),
        feature_names=names,
        name=f"synthetic-{seed}",
    )


def split(ds: Dataset, fraction: float, seed: int) -> SplitPair:
    """Uniform random partition; ``first`` gets round(fraction·M) items."""
    if not 0.0 < fraction < 1.0:
        raise ValidationError([f"fraction must lie in (0, 1), got {fraction!r}"])

    m = len(ds)
    n_first = _round_count(fraction, m)
    if n_first == 0 or n_first == m:
        raise ValidationError(
            [f"fraction {fraction} of {m} items leaves one side empty"]
        )

    perm = np.random.default_rng(seed).permutation(m)
    first = np.sort(perm[:n_first])
    second = np.sort(perm[n_first:])
    return SplitPair(
        first=ds.subset(first, name=f"{ds.name}/a"),
        second=ds.subset(second, name=f"{ds.name}/b"),
        seed=seed,
    )


def flip_noise(
    ds: Dataset,
    epsilon: float,
    seed: int,
    flip_labels: bool = True,
    flip_groups: bool = True,
) -> Dataset:
    """Copy of ``ds`` with exactly round(ε·M) labels and/or groups flipped."""
    ensure_valid(validate_probability("epsilon", epsilon))

    m = len(ds)
    k = _round_count(epsilon, m)
    rng = np.random.default_rng(seed)

    labels = ds.labels.copy()
    groups = ds.groups.copy()
    if flip_labels and k:
        pos = rng.choice(m, size=k, replace=False)
        labels[pos] = 1 - labels[pos]
    if flip_groups and k:
        pos = rng.choice(m, size=k, replace=False)
        groups[pos] = 1 - groups[pos]

    return replace(ds, labels=labels, groups=groups)


def with_group_feature(ds: Dataset) -> Dataset:
    """Copy of ``ds`` whose items carry the group indicator as a last column."""
    if GROUP_FEATURE in ds.feature_names:
        raise ValidationError([f"{ds.name} already has a {GROUP_FEATURE!r} column"])
    items = np.hstack([ds.items, ds.groups.reshape(-1, 1).astype(np.float64)])
    return replace(ds, items=items, feature_names=ds.feature_names + (GROUP_FEATURE,))
