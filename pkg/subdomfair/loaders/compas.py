"""ProPublica COMPAS two-year recidivism schema.

Label: two_year_recid. Group: race, binarized by ``race_policy``:

- ``two_largest`` (default): only the two most frequent races are kept; the
  most frequent ⇒ 1.
- ``largest_vs_rest``: most frequent race ⇒ 1, every other race ⇒ 0; keeps
  every row, which matches the 6,172-row count usually cited for COMPAS.

The ProPublica screening filters are applied when their columns exist.
"""

import numpy as np
import pandas as pd

from ..validation import ValidationError
from .table import (
    PreparedTable,
    coerce_numeric,
    normalize_columns,
    require_columns,
    strip_strings,
)

NUMERIC = (
    "age",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
    "priors_count",
)
CATEGORICAL = ("sex", "age_cat", "c_charge_degree")
GROUP = "race"
LABEL = "two_year_recid"
REQUIRED = NUMERIC + CATEGORICAL + (GROUP, LABEL)
RACE_POLICIES = ("largest_vs_rest", "two_largest")


def _screening_mask(frame: pd.DataFrame) -> pd.Series:
    mask = pd.Series(True, index=frame.index)
    if "days_b_screening_arrest" in frame.columns:
        days = pd.to_numeric(frame["days_b_screening_arrest"], errors="coerce")
        mask &= days.between(-30, 30)
    if "is_recid" in frame.columns:
        mask &= pd.to_numeric(frame["is_recid"], errors="coerce") != -1
    if "score_text" in frame.columns:
        mask &= frame["score_text"].fillna("N/A").str.strip() != "N/A"
    mask &= frame["c_charge_degree"].str.strip() != "O"
    return mask


def _rank_races(races: pd.Series) -> list:
    counts = races.value_counts()
    # ties broken by name for determinism
    return sorted(counts.index, key=lambda r: (-counts[r], r))


def prepare(
    raw: pd.DataFrame,
    include_protected: bool = False,
    race_policy: str = "two_largest",
) -> PreparedTable:
    if race_policy not in RACE_POLICIES:
        raise ValidationError(
            [f"unknown race policy {race_policy!r}; expected one of {RACE_POLICIES}"]
        )

    frame = normalize_columns(raw, lambda c: c.strip().lower())
    require_columns(frame, REQUIRED, "compas")

    frame = frame[_screening_mask(frame)]
    frame = frame[list(REQUIRED)].copy()
    frame = strip_strings(frame, CATEGORICAL + (GROUP,))
    frame = coerce_numeric(frame, NUMERIC + (LABEL,))
    frame = frame.dropna()
    frame = frame[frame[LABEL].isin([0, 1])]

    ranked = _rank_races(frame[GROUP])
    if race_policy == "two_largest":
        frame = frame[frame[GROUP].isin(ranked[:2])]
    majority = ranked[0] if ranked else None
    groups = (frame[GROUP] == majority).to_numpy(dtype=np.int8)

    categorical = CATEGORICAL + ((GROUP,) if include_protected else ())
    return PreparedTable(
        frame=frame,
        labels=frame[LABEL].to_numpy(dtype=np.int8),
        groups=groups,
        numeric=NUMERIC,
        categorical=categorical,
    )
