"""Experiment configuration: dataclass defaults, TOML files, flag overrides.

Precedence is defaults < config file < command-line flags. A config file
maps top-level keys onto ``ExperimentConfig`` and the ``[train]``,
``[synthetic]`` and ``[paths]`` tables onto the nested sections.
"""

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dataset import SCHEMAS
from .demogen import CONSTRAINTS
from .loaders.compas import RACE_POLICIES
from .metrics import DEFAULT_METRICS, METRICS
from .trainer import TrainConfig
from .validation import ValidationError, ensure_valid, validate_metric_ids, validate_probability

DATASETS = SCHEMAS + ("synthetic",)

# config-file spellings that differ from field names
_ALIASES = {"train": {"lambda": "lam"}}
# derived from the experiment-level values
_DERIVED = {"train": {"seed", "metric_ids"}}


@dataclass
class SyntheticConfig:
    m: int = 4000
    l: int = 8
    group_rate: float = 0.4
    flip_rate: float = 0.05
    shift: float = 2.13
    lead_weight: float = 1.78
    label_noise: float = 0.55
    threshold: float = 1.18

    def validate(self) -> List[str]:
        errors = []
        if self.m < 2:
            errors.append(f"synthetic.m must be >= 2, got {self.m}")
        if self.l < 1:
            errors.append(f"synthetic.l must be >= 1, got {self.l}")
        errors += validate_probability("synthetic.group_rate", self.group_rate)
        errors += validate_probability("synthetic.flip_rate", self.flip_rate)
        if not self.label_noise >= 0:
            errors.append(f"synthetic.label_noise must be >= 0, got {self.label_noise}")
        return errors


@dataclass
class PathsConfig:
    """Artifact locations; unset entries default to files under ``workdir``."""

    workdir: str = "runs"
    input: Optional[str] = None
    dataset: Optional[str] = None
    demos: Optional[str] = None
    test_demos: Optional[str] = None
    report: Optional[str] = None
    results: Optional[str] = None

    def resolve(self, name: str) -> Path:
        defaults = {
            "dataset": "dataset.jsonl",
            "demos": "demos_train.jsonl",
            "test_demos": "demos_test.jsonl",
            "report": "train_report.json",
            "results": "results",
        }
        explicit = getattr(self, name)
        return Path(explicit) if explicit else Path(self.workdir) / defaults[name]


@dataclass
class ExperimentConfig:
    dataset: str = "synthetic"
    epsilon: float = 0.2
    epsilons: Tuple[float, ...] = (0.0, 0.1, 0.2)
    n_demos: int = 50
    constraint: str = "dp"
    metric_ids: Tuple[str, ...] = DEFAULT_METRICS
    seed: int = 0
    workers: int = 1
    include_protected: bool = False
    group_feature: bool = True
    compas_race: str = "two_largest"
    train: TrainConfig = field(default_factory=TrainConfig)
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def __post_init__(self):
        self.metric_ids = tuple(self.metric_ids)
        self.epsilons = tuple(float(e) for e in self.epsilons)
        # one metric list drives synthesis, training and evaluation
        self.train = replace(self.train, metric_ids=self.metric_ids, seed=self.seed)

    def validate(self) -> List[str]:
        errors = []
        if self.dataset not in DATASETS:
            errors.append(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.constraint not in CONSTRAINTS:
            errors.append(f"constraint must be one of {CONSTRAINTS}, got {self.constraint!r}")
        if self.compas_race not in RACE_POLICIES:
            errors.append(f"compas_race must be one of {RACE_POLICIES}, got {self.compas_race!r}")
        if self.n_demos < 1:
            errors.append(f"n_demos must be >= 1, got {self.n_demos}")
        if self.workers < 1:
            errors.append(f"workers must be >= 1, got {self.workers}")
        errors += validate_probability("epsilon", self.epsilon)
        if not self.epsilons:
            errors.append("epsilons must be nonempty")
        for eps in self.epsilons:
            errors += validate_probability("epsilons entry", eps)
        errors += validate_metric_ids(self.metric_ids, METRICS)
        errors += self.train.validate()
        errors += self.synthetic.validate()
        return errors


_SECTIONS = {"train": TrainConfig, "synthetic": SyntheticConfig, "paths": PathsConfig}


def _field_names(cls) -> set:
    return {f.name for f in fields(cls)}


def _split_mapping(data: Mapping[str, Any]) -> Tuple[Dict[str, Any], Dict[str, Dict[str, Any]], List[str]]:
    """Separate top-level values from section tables; collect unknown keys."""
    top_fields = _field_names(ExperimentConfig) - set(_SECTIONS)
    top, sections, unknown = {}, {}, []
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, Mapping):
                unknown.append(f"{key} (expected a table)")
                continue
            allowed = _field_names(_SECTIONS[key]) - _DERIVED.get(key, set())
            aliases = _ALIASES.get(key, {})
            section = {}
            for sub, sub_value in value.items():
                name = aliases.get(sub, sub)
                if name in allowed:
                    section[name] = sub_value
                else:
                    unknown.append(f"{key}.{sub}")
            sections[key] = section
        elif key in top_fields:
            top[key] = value
        else:
            unknown.append(key)
    return top, sections, unknown


def _without_none(values: Mapping[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in values.items() if v is not None}


def apply_overrides(
    config: ExperimentConfig,
    top: Mapping[str, Any],
    sections: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> ExperimentConfig:
    """New config with non-None values layered over ``config``."""
    sections = sections or {}
    nested = {
        name: replace(getattr(config, name), **_without_none(sections.get(name, {})))
        for name in _SECTIONS
    }
    return replace(config, **_without_none(top), **nested)


def config_from_mapping(data: Mapping[str, Any], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    top, sections, unknown = _split_mapping(data)
    if unknown:
        raise ValidationError([f"unknown config keys: {sorted(unknown)}"])
    for key in ("metric_ids", "epsilons"):
        if key in top:
            top[key] = tuple(top[key])
    return apply_overrides(base or ExperimentConfig(), top, sections)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read a TOML config file over ``base`` (or the defaults)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, "rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ValidationError([f"{path}: {e}"]) from e
    return config_from_mapping(data, base)


def checked(config: ExperimentConfig) -> ExperimentConfig:
    ensure_valid(config.validate())
    return config
