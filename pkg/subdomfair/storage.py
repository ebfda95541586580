"""Readers and writers for pipeline artifacts.

Every artifact is deterministic text: JSON with sorted keys, one header
record carrying ``schema_version`` and ``kind``. Datasets and demonstration
sets are JSON Lines (header, then one record per item or demo); training
reports are a single JSON document.
"""

import json
import logging
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .dataset import Dataset
from .demogen import DemonstrationSet, Provenance
from .metrics import DecisionVector, MetricProfile
from .policy import PolicyModel
from .trainer import TrainReport
from .validation import SchemaError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DATASET_KIND = "dataset"
DEMOS_KIND = "demonstrations"
REPORT_KIND = "train_report"


def _dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _write_lines(path, records: Iterator[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(_dumps(record))
            f.write("\n")
    logger.debug("wrote %s", path)
    return path


def _check_header(header: dict, kind: str, path) -> None:
    errors = []
    if header.get("kind") != kind:
        errors.append(f"{path}: expected kind {kind!r}, found {header.get('kind')!r}")
    if header.get("schema_version") != SCHEMA_VERSION:
        errors.append(
            f"{path}: unsupported schema_version {header.get('schema_version')!r}"
        )
    if errors:
        raise SchemaError(errors)


def _read_lines(path, kind: str) -> Tuple[dict, List[dict]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"artifact not found: {path}")
    with open(path, encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise SchemaError([f"{path}: empty file"])
    try:
        records = [json.loads(line) for line in lines]
    except json.JSONDecodeError as e:
        raise SchemaError([f"{path}: invalid JSON ({e})"]) from e
    _check_header(records[0], kind, path)
    return records[0], records[1:]


def write_dataset(ds: Dataset, path) -> Path:
    header = {
        "kind": DATASET_KIND,
        "schema_version": SCHEMA_VERSION,
        "name": ds.name,
        "m": len(ds),
        "feature_names": list(ds.feature_names),
    }

    def records():
        yield header
        for i in range(len(ds)):
            yield {
                "id": int(ds.ids[i]),
                "features": ds.items[i].tolist(),
                "label": int(ds.labels[i]),
                "group": int(ds.groups[i]),
            }

    return _write_lines(path, records())


def read_dataset(path) -> Dataset:
    header, rows = _read_lines(path, DATASET_KIND)
    if len(rows) != header.get("m"):
        raise SchemaError([f"{path}: header says {header.get('m')} items, found {len(rows)}"])
    try:
        return Dataset(
            items=np.array([r["features"] for r in rows], dtype=np.float64),
            labels=[r["label"] for r in rows],
            groups=[r["group"] for r in rows],
            ids=[r["id"] for r in rows],
            feature_names=tuple(header["feature_names"]),
            name=header.get("name", "dataset"),
        )
    except KeyError as e:
        raise SchemaError([f"{path}: record missing field {e}"]) from e


def write_demos(demos: DemonstrationSet, path) -> Path:
    prov = demos.provenance
    header = {
        "kind": DEMOS_KIND,
        "schema_version": SCHEMA_VERSION,
        "n": len(demos),
        "epsilon": prov.epsilon,
        "constraint": prov.constraint,
        "base_seed": prov.base_seed,
        "seeds": list(prov.seeds),
        "metric_ids": list(prov.metric_ids),
        "baseline": prov.baseline,
        "role": prov.role,
    }

    def records():
        yield header
        for d, p in zip(demos.demos, demos.profiles):
            yield {
                "item_ids": d.item_ids.tolist(),
                "values": d.values.tolist(),
                "profile": p.values.tolist(),
            }

    return _write_lines(path, records())


def read_demos(path) -> DemonstrationSet:
    header, rows = _read_lines(path, DEMOS_KIND)
    if len(rows) != header.get("n"):
        raise SchemaError([f"{path}: header says {header.get('n')} demos, found {len(rows)}"])
    try:
        metric_ids = tuple(header["metric_ids"])
        provenance = Provenance(
            epsilon=float(header["epsilon"]),
            constraint=header["constraint"],
            base_seed=int(header["base_seed"]),
            seeds=tuple(header["seeds"]),
            metric_ids=metric_ids,
            baseline=header.get("baseline", "post_processing"),
            role=header.get("role", "train"),
        )
        return DemonstrationSet(
            demos=tuple(DecisionVector(values=r["values"], item_ids=r["item_ids"]) for r in rows),
            profiles=tuple(MetricProfile(metric_ids=metric_ids, values=r["profile"]) for r in rows),
            provenance=provenance,
        )
    except KeyError as e:
        raise SchemaError([f"{path}: record missing field {e}"]) from e


def write_report(report: TrainReport, path, extra: Optional[dict] = None) -> Path:
    """Training report as one JSON document; ``extra`` adds diagnostics."""
    doc = {
        "kind": REPORT_KIND,
        "schema_version": SCHEMA_VERSION,
        "theta": report.final_theta.theta.tolist(),
        "alpha_history": report.alpha_history.tolist(),
        "subdom_history": report.subdom_history.tolist(),
        "selection_history": report.selection_history.tolist(),
        "iterations_run": report.iterations_run,
        "best_iteration": report.best_iteration,
        "metric_ids": list(report.metric_ids),
        "config": report.config,
    }
    if extra:
        doc.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False))
        f.write("\n")
    return path


def read_report_document(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"training report not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError([f"{path}: invalid JSON ({e})"]) from e
    _check_header(doc, REPORT_KIND, path)
    return doc


def read_report(path) -> TrainReport:
    doc = read_report_document(path)
    try:
        k = len(doc["metric_ids"])
        return TrainReport(
            final_theta=PolicyModel(theta=doc["theta"]),
            alpha_history=np.array(doc["alpha_history"], dtype=np.float64).reshape(-1, k),
            subdom_history=np.array(doc["subdom_history"], dtype=np.float64),
            selection_history=np.array(doc["selection_history"], dtype=np.float64),
            iterations_run=int(doc["iterations_run"]),
            best_iteration=int(doc["best_iteration"]),
            metric_ids=tuple(doc["metric_ids"]),
            config=doc.get("config", {}),
        )
    except KeyError as e:
        raise SchemaError([f"{path}: report missing field {e}"]) from e
