"""Schema-specific loaders for raw tabular fairness datasets."""

from . import adult, compas
from .table import PreparedTable, read_raw

__all__ = ["PreparedTable", "read_raw", "adult", "compas"]
