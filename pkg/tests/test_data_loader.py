from __future__ import annotations

import json

import pytest

from app.core.data_loader import DataLoaderError, load_example, load_examples


def test_bundled_examples():
    records = {record.id: record for record in load_examples()}
    assert set(records) == {"polya", "gundersen", "reinders", "triple"}
    gundersen = records["gundersen"]
    assert gundersen.model == "exp"
    assert gundersen.values == ("1", "0", "∞", "-1/8")
    assert gundersen.cm == (False, False, False, False)
    assert gundersen.table is not None and gundersen.table.psi == "8"
    assert records["triple"].alpha is not None
    assert records["reinders"].rmax == 12.0
    assert records["triple"].rmax_periods == 3.0


def test_load_example_unknown():
    assert load_example("polya").title
    assert load_example("steinmetz_triple").id == "triple"
    with pytest.raises(KeyError):
        load_example("nope")


def _write(tmp_path, items):
    path = tmp_path / "examples.json"
    path.write_text(json.dumps(items), encoding="utf-8")
    return path


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(DataLoaderError):
        load_examples(tmp_path / "absent.json")
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(DataLoaderError):
        load_examples(path)
    with pytest.raises(DataLoaderError):
        load_examples(_write(tmp_path, []))


def test_record_validation(tmp_path):
    base = {"id": " x ", "model": "exp", "values": ["0", "1"], "cm": [True, False]}
    record = load_examples(_write(tmp_path, [base]))[0]
    assert record.id == "x" and record.rmin == 2.0 and record.table is None
    assert record.aliases == ()
    aliased = load_examples(_write(tmp_path, [dict(base, aliases=[" y "])]))[0]
    assert aliased.aliases == ("y",)
    with pytest.raises(DataLoaderError):
        load_examples(_write(tmp_path, [dict(base, cm=[True])]))
    without_model = {key: value for key, value in base.items() if key != "model"}
    with pytest.raises(DataLoaderError):
        load_examples(_write(tmp_path, [without_model]))
