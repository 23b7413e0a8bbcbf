"""Tests for utility/helper functions."""

import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from kinetic_ness import helpers
from kinetic_ness.constants import THREADS_ENV
from kinetic_ness.enums import FitStatus
from kinetic_ness.errors import OutputError


def test_get_serializable_value() -> None:
    """Test get_serializable_value helper."""
    assert helpers.get_serializable_value(np.arange(3.0)) == [0.0, 1.0, 2.0]
    assert helpers.get_serializable_value(np.float64(0.5)) == 0.5
    assert helpers.get_serializable_value(FitStatus.OK) == "ok"
    assert helpers.get_serializable_value({"a": (1, 2)}) == {"a": [1, 2]}
    assert helpers.get_serializable_value(math.nan) is None
    assert helpers.get_serializable_value(math.inf) is None
    with pytest.raises(TypeError):
        helpers.get_serializable_value(object(), raise_unhandled=True)


def test_write_table(tmp_path: Path) -> None:
    """Test write_table keeps every bit and reports unwritable paths."""
    values = [0.1, 1 / 3, 2.0256410256410255, 1e-300, -7.25, math.nan]
    path = tmp_path / "table.csv"
    helpers.write_table(pd.DataFrame({"x": values, "n": range(6)}), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,n"
    assert lines[5] == "-7.25,4"
    assert lines[6] == "nan,5"
    back = pd.read_csv(path, float_precision="round_trip")
    assert back["x"].tolist()[:5] == values[:5]
    helpers.write_table(pd.DataFrame([[2.0]]), path, header=False, append=True)
    assert path.read_text().splitlines()[-1] == "2"
    with pytest.raises(OutputError) as err:
        helpers.write_table(pd.DataFrame({"x": [1.0]}), tmp_path / "missing" / "table.csv")
    assert err.value.path == str(tmp_path / "missing" / "table.csv")


def test_resolve_thread_count(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test resolve_thread_count helper."""
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert helpers.resolve_thread_count() == 1
    monkeypatch.setenv(THREADS_ENV, "4")
    assert helpers.resolve_thread_count() == 4
    monkeypatch.setenv(THREADS_ENV, "0")
    assert helpers.resolve_thread_count() == 1
    monkeypatch.setenv(THREADS_ENV, "many")
    assert helpers.resolve_thread_count(2) == 2
