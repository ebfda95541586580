"""UCI Adult income schema.

Label: income >50K ⇒ 1. Group: sex, Male ⇒ 1, Female ⇒ 0.
"""

import re

import numpy as np
import pandas as pd

from .table import (
    PreparedTable,
    coerce_numeric,
    normalize_columns,
    require_columns,
    strip_strings,
)

NUMERIC = (
    "age",
    "fnlwgt",
    "education-num",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
)
CATEGORICAL = (
    "workclass",
    "education",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "native-country",
)
GROUP = "sex"
LABEL = "income"
REQUIRED = NUMERIC + CATEGORICAL + (GROUP, LABEL)

_LABELS = {">50K": 1, "<=50K": 0}
_GROUPS = {"Male": 1, "Female": 0}


def _column_name(name: str) -> str:
    # education_num, education.num and "Education-Num" all map to education-num
    return re.sub(r"[_.\s]+", "-", name.strip().lower())


def prepare(raw: pd.DataFrame, include_protected: bool = False) -> PreparedTable:
    frame = normalize_columns(raw, _column_name)
    require_columns(frame, REQUIRED, "adult")

    frame = frame[list(REQUIRED)].copy()
    frame = strip_strings(frame, CATEGORICAL + (GROUP, LABEL))
    frame = coerce_numeric(frame, NUMERIC)
    frame[LABEL] = frame[LABEL].str.rstrip(".").map(_LABELS)
    frame[GROUP] = frame[GROUP].map(_GROUPS)
    frame = frame.dropna()

    categorical = CATEGORICAL + ((GROUP,) if include_protected else ())
    return PreparedTable(
        frame=frame,
        labels=frame[LABEL].to_numpy(dtype=np.int8),
        groups=frame[GROUP].to_numpy(dtype=np.int8),
        numeric=NUMERIC,
        categorical=categorical,
    )
