#!/usr/bin/env python3
"""Test CLI commands end to end on a small synthetic dataset."""

import json
import tempfile
from pathlib import Path

import pytest

from subdomfair.cli import main

SMALL = ["--m", "400", "--l", "4"]


def run_stages(workdir):
    """prepare → demos → train → eval; returns the exit codes."""
    w = ["--workdir", str(workdir)]
    return [
        main(["prepare", *w, *SMALL]),
        main(["demos", *w, "--n", "3", "--epsilon", "0.1"]),
        main(["train", *w, "--max-iters", "3", "--patience", "5"]),
        main(["eval", *w]),
    ]


def test_stage_by_stage_flow(capsys):
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        assert run_stages(tmp) == [0, 0, 0, 0]

        for name in ("dataset.jsonl", "demos_train.jsonl", "demos_test.jsonl", "train_report.json"):
            assert (tmp / name).exists(), name
        results = tmp / "results"
        assert (results / "table_comparison.csv").exists()
        assert (results / "table_gamma.csv").exists()
        assert len(list(results.glob("scatter_*.csv"))) == 6

        doc = json.loads((tmp / "train_report.json").read_text())
        assert doc["kind"] == "train_report"
        assert 0.0 <= doc["bound_gamma"] <= 1.0
        assert doc["iterations_run"] == 3

    out = capsys.readouterr().out
    assert "✅ wrote dataset" in out
    assert "gamma_test=" in out


def test_reruns_are_byte_identical():
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        assert run_stages(a) == [0, 0, 0, 0]
        assert run_stages(b) == [0, 0, 0, 0]
        files_a = sorted(p.relative_to(a) for p in Path(a).rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(b) for p in Path(b).rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (Path(a) / rel).read_bytes() == (Path(b) / rel).read_bytes(), rel


def test_explicit_paths_override_workdir():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = tmp / "cache" / "ds.jsonl"
        assert main(["prepare", "--workdir", str(tmp / "unused"), "--out", str(data), *SMALL]) == 0
        assert data.exists()
        assert not (tmp / "unused" / "dataset.jsonl").exists()
        assert main(["demos", "--data", str(data), "--out", str(tmp / "d.jsonl"),
                     "--test-out", str(tmp / "t.jsonl"), "--n", "2"]) == 0
        assert (tmp / "d.jsonl").exists() and (tmp / "t.jsonl").exists()


def test_config_file_is_used_and_flags_win():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = tmp / "run.toml"
        config.write_text('[synthetic]\nm = 300\nl = 3\n\n[paths]\nworkdir = "%s"\n' % (tmp / "w"))
        assert main(["prepare", "--config", str(config), "--m", "250"]) == 0
        header = json.loads((tmp / "w" / "dataset.jsonl").read_text().splitlines()[0])
        assert header["m"] == 250
        assert len(header["feature_names"]) == 3


def test_usage_errors_exit_with_one(capsys):
    assert main([]) == 1
    assert main(["bogus"]) == 1
    assert main(["demos", "--epsilon", "abc"]) == 1
    with tempfile.TemporaryDirectory() as tmp:
        assert main(["demos", "--workdir", tmp, "--epsilon", "1.5"]) == 1
        assert main(["prepare", "--config", str(Path(tmp) / "absent.toml")]) == 1
    err = capsys.readouterr().err
    assert "❌" in err
    assert "epsilon must lie in [0, 1]" in err


def test_runtime_errors_exit_with_two(capsys):
    with tempfile.TemporaryDirectory() as tmp:
        assert main(["prepare", "--workdir", tmp, *SMALL]) == 0
        # no training report yet
        assert main(["eval", "--workdir", tmp]) == 2
        assert main(["train", "--workdir", tmp]) == 2
        assert main(["prepare", "--workdir", tmp, "--dataset", "adult"]) == 2
    assert "❌" in capsys.readouterr().err


@pytest.mark.parametrize("action", ["train", "experiment"])
def test_help_lists_defaults(action, capsys):
    assert main([action, "--help"]) == 0
    out = capsys.readouterr().out
    assert "--lambda" in out
    assert "(default: 0.01)" in out
    assert "(default: 300)" in out


def test_demos_help_lists_default_count(capsys):
    assert main(["demos", "--help"]) == 0
    assert "(default: 50)" in capsys.readouterr().out


def test_single_demo_without_noise():
    with tempfile.TemporaryDirectory() as tmp:
        w = ["--workdir", tmp]
        assert main(["prepare", *w, "--dataset", "synthetic", "--seed", "7", "--m", "2000"]) == 0
        assert main(["demos", *w, "--seed", "7", "--n", "1", "--epsilon", "0"]) == 0
        lines = (Path(tmp) / "demos_train.jsonl").read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["n"] == 1


def test_group_feature_flag_sets_policy_width():
    with tempfile.TemporaryDirectory() as tmp:
        w = ["--workdir", str(tmp)]
        report = Path(tmp) / "train_report.json"
        assert main(["prepare", *w, *SMALL]) == 0
        assert main(["demos", *w, "--n", "3"]) == 0
        assert main(["train", *w, "--max-iters", "2"]) == 0
        wide = json.loads(report.read_text())
        assert main(["train", *w, "--max-iters", "2", "--no-group-feature", "--no-baseline"]) == 0
        plain = json.loads(report.read_text())
    assert len(wide["theta"]) == 5
    assert len(plain["theta"]) == 4
    assert wide["config"]["baseline"] is True
    assert plain["config"]["baseline"] is False
