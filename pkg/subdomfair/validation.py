"""Validation functions for pipeline integrity checks.

Each ``validate_*`` function returns a list of problems; an empty list means
valid. ``ensure_valid`` turns a non-empty list into an exception.
"""

from typing import TYPE_CHECKING, Iterable, List, Optional, Sequence, Type

import numpy as np

if TYPE_CHECKING:
    from .dataset import Dataset
    from .metrics import MetricProfile


class SubdomfairError(Exception):
    """Base class for all library errors."""


class ValidationError(SubdomfairError, ValueError):
    """One or more integrity checks failed."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SchemaError(ValidationError):
    """A tabular file does not match the named schema."""


class EmptyDatasetError(ValidationError):
    """No items left after filtering."""


class UnresolvedItemError(SubdomfairError, KeyError):
    """A decision vector references item ids missing from the dataset."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unresolved item ids"


def ensure_valid(
    errors: List[str], error_cls: Type[ValidationError] = ValidationError
) -> None:
    """Raise ``error_cls`` when ``errors`` is non-empty."""
    if errors:
        raise error_cls(errors)


def _is_binary(values: np.ndarray) -> bool:
    return bool(np.isin(values, (0, 1)).all())


def validate_probability(name: str, value: float) -> List[str]:
    if not np.isfinite(value) or not 0.0 <= value <= 1.0:
        return [f"{name} must lie in [0, 1], got {value!r}"]
    return []


def validate_dataset_arrays(
    items: np.ndarray, labels: np.ndarray, groups: np.ndarray, ids: np.ndarray
) -> List[str]:
    """Validate the four aligned arrays of a Dataset."""
    errors = []

    if items.ndim != 2:
        errors.append(f"items must be a 2-D matrix, got {items.ndim}-D")
        return errors

    m = items.shape[0]
    if m < 1:
        errors.append("dataset must contain at least one item")
    for name, arr in (("labels", labels), ("groups", groups), ("ids", ids)):
        if arr.ndim != 1 or arr.shape[0] != m:
            errors.append(f"{name} must be a vector of length {m}, got {arr.shape}")
    if errors:
        return errors

    if not _is_binary(labels):
        errors.append("labels must contain only 0 or 1")
    if not _is_binary(groups):
        errors.append("groups must contain only 0 or 1")
    if np.unique(ids).size != m:
        errors.append("ids must be unique within the dataset")
    if not np.isfinite(items).all():
        errors.append("items contain non-finite values")

    return errors


def validate_decisions(values: np.ndarray, item_ids: np.ndarray) -> List[str]:
    """Validate a DecisionVector's arrays."""
    errors = []
    if values.ndim != 1 or item_ids.ndim != 1:
        errors.append("decision values and item ids must be vectors")
        return errors
    if values.shape[0] != item_ids.shape[0]:
        errors.append(
            f"{values.shape[0]} decisions but {item_ids.shape[0]} item ids"
        )
    if not _is_binary(values):
        errors.append("decision values must contain only 0 or 1")
    if np.unique(item_ids).size != item_ids.shape[0]:
        errors.append("decision item ids must be unique")
    return errors


def validate_metric_ids(
    metric_ids: Sequence[str], known: Iterable[str]
) -> List[str]:
    """Check that metric ids are nonempty, known and not duplicated."""
    errors = []
    known = set(known)
    if not metric_ids:
        errors.append("metric_ids must be nonempty")
    unknown = [m for m in metric_ids if m not in known]
    if unknown:
        errors.append(f"unknown metric ids: {unknown} (known: {sorted(known)})")
    if len(set(metric_ids)) != len(metric_ids):
        errors.append(f"duplicate metric ids in {list(metric_ids)}")
    return errors


def validate_shared_metrics(
    reference: Sequence[str], profiles: Iterable["MetricProfile"]
) -> List[str]:
    """Every profile must use exactly the reference metric ordering."""
    errors = []
    reference = tuple(reference)
    for i, prof in enumerate(profiles):
        if tuple(prof.metric_ids) != reference:
            errors.append(
                f"profile {i} has metric_ids {list(prof.metric_ids)}, "
                f"expected {list(reference)}"
            )
    return errors


def validate_demonstrations(
    demos, dataset: "Dataset", metric_ids: Optional[Sequence[str]] = None
) -> List[str]:
    """Validate a DemonstrationSet against the dataset its items come from."""
    errors = []

    if len(demos.demos) < 1:
        errors.append("demonstration set is empty")
    if len(demos.demos) != len(demos.profiles):
        errors.append(
            f"{len(demos.demos)} demos but {len(demos.profiles)} profiles"
        )

    expected = tuple(metric_ids) if metric_ids is not None else demos.metric_ids
    if tuple(demos.metric_ids) != tuple(expected):
        errors.append(
            f"demonstrations use metric_ids {list(demos.metric_ids)}, "
            f"expected {list(expected)}"
        )
    errors.extend(validate_shared_metrics(demos.metric_ids, demos.profiles))

    known = dataset.id_set()
    for i, demo in enumerate(demos.demos):
        missing = [int(x) for x in demo.item_ids if int(x) not in known]
        if missing:
            errors.append(
                f"demo {i}: {len(missing)} item ids not in dataset "
                f"(first: {missing[:3]})"
            )

    return errors
