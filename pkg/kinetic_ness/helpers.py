"""Generic utility functions/helpers for the kinetic simulator."""

from __future__ import annotations

import math
import os
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .constants import CSV_FLOAT_FORMAT, THREADS_ENV
from .errors import OutputError


def get_serializable_value(obj: Any, raise_unhandled: bool = False) -> Any:
    """Parse the value to its serializable equivalent."""
    if isinstance(obj, np.ndarray):
        return [get_serializable_value(x) for x in obj.tolist()]
    if isinstance(obj, np.generic):
        return get_serializable_value(obj.item())
    if isinstance(obj, list | tuple | set | frozenset):
        return [get_serializable_value(x) for x in obj]
    if isinstance(obj, dict):
        return {str(key): get_serializable_value(value) for key, value in obj.items()}
    if isinstance(obj, Enum):
        return obj.value
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, float) and not math.isfinite(obj):
        # JSON has no representation for nan/inf
        return None
    if raise_unhandled and not isinstance(obj, str | int | float | bool | type(None)):
        raise TypeError
    return obj


def write_table(
    frame: pd.DataFrame, path: Path | str, *, header: bool = True, append: bool = False
) -> None:
    """Write a table as CSV with 17 significant digits (bit-exact round trip)."""
    path = Path(path)
    try:
        frame.to_csv(
            path,
            mode="a" if append else "w",
            header=header,
            index=False,
            float_format=CSV_FLOAT_FORMAT,
            na_rep="nan",
            lineterminator="\n",
        )
    except OSError as err:
        msg = f"cannot write {path}: {err}"
        raise OutputError(msg, path=str(path)) from err


def resolve_thread_count(default: int = 1) -> int:
    """Return the worker count configured through the environment."""
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return default
    try:
        count = int(raw)
    except ValueError:
        return default
    return max(1, count)
