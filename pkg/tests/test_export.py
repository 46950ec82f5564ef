from __future__ import annotations

import json

import numpy as np
import pytest

from app.numeric.export import (ExportError, dumps_json, profile_to_csv, profile_to_dict, read_csv_columns,
                                write_atomic, write_profile)
from app.numeric.nevanlinna import NevProfile


@pytest.fixture
def profile():
    r = np.array([1.5, 3.0, 6.0])
    return NevProfile(
        tuple(r), ("f", "g"), ("1",),
        T={"f": r / np.pi, "g": r / np.pi + 0.1},
        N={("f", "1"): np.log(r), ("g", "1"): 2 * np.log(r)},
        Nbar={("f", "1"): np.log(r), ("g", "1"): np.log(r)},
        Ns={"1": np.zeros(3)},
        extra={"Nbar[f-g]": np.array([0.0, 1.0 / 3.0, 2.0])},
        metadata={"example": "toy", "pair": ["f", "g"]},
    )


def test_profile_dict_layout(profile):
    data = profile_to_dict(profile)
    assert data["r_grid"] == [1.5, 3.0, 6.0]
    assert data["functions"] == ["f", "g"]
    assert list(data["series"])[:3] == ["T_f", "T_g", "T"]
    assert data["series"]["T"] == pytest.approx(list(np.array([1.5, 3.0, 6.0]) / np.pi + 0.1))
    assert data["metadata"]["example"] == "toy"


def test_csv_round_trip_is_exact(profile):
    columns = read_csv_columns(profile_to_csv(profile))
    assert list(columns)[0] == "r"
    np.testing.assert_array_equal(columns["Nbar[f-g]"], profile.extra["Nbar[f-g]"])
    np.testing.assert_array_equal(columns["N_g[1]"], profile.N[("g", "1")])


def test_json_handles_numpy_and_complex():
    text = dumps_json({"z": 1 + 2j, "a": np.arange(3), "x": np.float64(0.1)})
    assert json.loads(text) == {"z": {"re": 1.0, "im": 2.0}, "a": [0, 1, 2], "x": 0.1}


def test_write_profile_writes_both_formats(profile, tmp_path):
    written = write_profile(profile, tmp_path / "nested" / "toy")
    assert sorted(written) == ["csv", "json"]
    assert json.loads(written["json"].read_text(encoding="utf-8"))["values"] == ["1"]
    assert written["csv"].read_text(encoding="utf-8").startswith("r,")
    assert sorted(p.name for p in (tmp_path / "nested").iterdir()) == ["toy.csv", "toy.json"]


def test_unknown_format_is_rejected(profile, tmp_path):
    with pytest.raises(ExportError):
        write_profile(profile, tmp_path / "toy", formats=("xml",))


def test_write_atomic_replaces_existing(tmp_path):
    target = tmp_path / "out.json"
    write_atomic(target, "first\n")
    write_atomic(target, "second\n")
    assert target.read_text(encoding="utf-8") == "second\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]
