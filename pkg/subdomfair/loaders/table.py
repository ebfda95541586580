"""Shared raw-table helpers for the schema loaders."""

import os
from dataclasses import dataclass
from typing import Callable, Iterable, Tuple

import numpy as np
import pandas as pd

from ..validation import SchemaError


@dataclass
class PreparedTable:
    """Filtered raw rows plus binarized label and group vectors.

    ``frame`` keeps the original row numbers as its index; they become the
    dataset's stable item ids.
    """

    frame: pd.DataFrame
    labels: np.ndarray
    groups: np.ndarray
    numeric: Tuple[str, ...]
    categorical: Tuple[str, ...]


def read_raw(path: str) -> pd.DataFrame:
    """Read a comma-delimited file with a header row; '?' marks missing."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"data file not found: {path}")
    return pd.read_csv(path, skipinitialspace=True, na_values=["?"], dtype=str)


def normalize_columns(
    frame: pd.DataFrame, rename: Callable[[str], str]
) -> pd.DataFrame:
    frame = frame.copy()
    frame.columns = [rename(str(c)) for c in frame.columns]
    return frame


def require_columns(frame: pd.DataFrame, required: Iterable[str], schema: str) -> None:
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError([f"{schema} schema: missing required columns {missing}"])


def strip_strings(frame: pd.DataFrame, columns: Iterable[str]) -> pd.DataFrame:
    for col in columns:
        frame[col] = frame[col].str.strip()
    return frame


def coerce_numeric(frame: pd.DataFrame, columns: Iterable[str]) -> pd.DataFrame:
    """Unparseable numeric cells become NaN and the row is dropped later."""
    for col in columns:
        frame[col] = pd.to_numeric(frame[col], errors="coerce")
    return frame
