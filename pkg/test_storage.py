#!/usr/bin/env python3
"""Test artifact persistence: datasets, demonstration sets, training reports."""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest

from subdomfair.dataset import generate_synthetic
from subdomfair.demogen import synthesize_demos
from subdomfair.metrics import DEFAULT_METRICS
from subdomfair.storage import (
    read_dataset,
    read_demos,
    read_report,
    read_report_document,
    write_dataset,
    write_demos,
    write_report,
)
from subdomfair.trainer import TrainConfig, train
from subdomfair.validation import SchemaError


@pytest.fixture(scope="module")
def artifacts():
    ds = generate_synthetic(3, 200, 3, 0.4, 0.05)
    demos = synthesize_demos(ds, 3, 0.1, "eqodds", seed=4, metric_ids=DEFAULT_METRICS)
    report = train(demos, ds, TrainConfig(max_iters=3, patience=5))
    return ds, demos, report


def test_dataset_survives_storage(artifacts):
    ds, _, _ = artifacts
    with tempfile.TemporaryDirectory() as tmp:
        path = write_dataset(ds, Path(tmp) / "nested" / "dataset.jsonl")
        back = read_dataset(path)
    np.testing.assert_array_equal(back.items, ds.items)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.groups, ds.groups)
    np.testing.assert_array_equal(back.ids, ds.ids)
    assert back.feature_names == ds.feature_names
    assert back.name == ds.name


def test_demos_keep_provenance(artifacts):
    _, demos, _ = artifacts
    with tempfile.TemporaryDirectory() as tmp:
        back = read_demos(write_demos(demos, Path(tmp) / "demos.jsonl"))
    assert back.provenance == demos.provenance
    np.testing.assert_array_equal(back.profile_matrix(), demos.profile_matrix())
    for a, b in zip(back.demos, demos.demos):
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.item_ids, b.item_ids)


def test_report_with_extra_diagnostics(artifacts):
    _, _, report = artifacts
    with tempfile.TemporaryDirectory() as tmp:
        path = write_report(report, Path(tmp) / "report.json", extra={"bound_gamma": 0.5})
        doc = read_report_document(path)
        back = read_report(path)
    assert doc["bound_gamma"] == 0.5
    assert doc["config"]["lam"] == report.config["lam"]
    np.testing.assert_array_equal(back.final_theta.theta, report.final_theta.theta)
    np.testing.assert_array_equal(back.alpha_history, report.alpha_history)
    np.testing.assert_array_equal(back.selection_history, report.selection_history)
    assert back.best_iteration == report.best_iteration
    assert back.metric_ids == report.metric_ids


def test_writes_are_byte_identical(artifacts):
    ds, demos, report = artifacts
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for name, write, obj in (
            ("d", write_dataset, ds),
            ("m", write_demos, demos),
            ("r", write_report, report),
        ):
            a = write(obj, tmp / f"{name}1").read_bytes()
            b = write(obj, tmp / f"{name}2").read_bytes()
            assert a == b
            assert b"\r\n" not in a


def test_header_records_kind_and_version(artifacts):
    _, demos, _ = artifacts
    with tempfile.TemporaryDirectory() as tmp:
        path = write_demos(demos, Path(tmp) / "demos.jsonl")
        header = json.loads(path.read_text().splitlines()[0])
    assert header["kind"] == "demonstrations"
    assert header["schema_version"] == 1
    assert header["seeds"] == [4, 5, 6]
    assert header["constraint"] == "eqodds"


def test_reading_the_wrong_kind_fails(artifacts):
    ds, _, _ = artifacts
    with tempfile.TemporaryDirectory() as tmp:
        path = write_dataset(ds, Path(tmp) / "dataset.jsonl")
        with pytest.raises(SchemaError, match="kind"):
            read_demos(path)


def test_unsupported_version_and_truncation(artifacts):
    ds, _, _ = artifacts
    with tempfile.TemporaryDirectory() as tmp:
        path = write_dataset(ds, Path(tmp) / "dataset.jsonl")
        lines = path.read_text().splitlines()

        header = json.loads(lines[0])
        header["schema_version"] = 2
        bumped = Path(tmp) / "bumped.jsonl"
        bumped.write_text("\n".join([json.dumps(header)] + lines[1:]) + "\n")
        with pytest.raises(SchemaError, match="schema_version"):
            read_dataset(bumped)

        short = Path(tmp) / "short.jsonl"
        short.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(SchemaError, match="items"):
            read_dataset(short)


def test_malformed_and_missing_files():
    with tempfile.TemporaryDirectory() as tmp:
        bad = Path(tmp) / "bad.jsonl"
        bad.write_text("{not json\n")
        with pytest.raises(SchemaError):
            read_dataset(bad)
        empty = Path(tmp) / "empty.json"
        empty.write_text("")
        with pytest.raises(SchemaError):
            read_demos(empty)
        with pytest.raises(FileNotFoundError):
            read_report(Path(tmp) / "absent.json")
        with pytest.raises(FileNotFoundError):
            read_dataset(Path(tmp) / "absent.jsonl")
