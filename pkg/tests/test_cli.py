from __future__ import annotations

import json

import pytest

from app.cli import commands
from app.cli.main_app import build_parser, main
from app.core import catalog
from app.core.config import RunConfig

GUNDERSEN_F = "((1, 1);())/(1, -2, 1) @ exp"
GUNDERSEN_G = "((1/8, 1/4, 1/8);())/(-1, 1) @ exp"


def test_parser_defaults():
    args = build_parser().parse_args(["check", "gundersen", "psi", "--linear"])
    assert args.command == "check" and args.which == "psi"
    assert args.example == "gundersen" and args.geometric is False
    assert args.rcount is None


def test_catalog_list(capsys):
    assert main(["catalog"]) == commands.EXIT_OK
    out = capsys.readouterr().out
    assert "gundersen" in out and "triple" in out


def test_usage_errors(capsys):
    assert main(["check", "gundersen", "bogus"]) == commands.EXIT_USAGE
    assert main([]) == commands.EXIT_USAGE
    assert main(["verify", "weber"]) == commands.EXIT_USAGE
    assert main(["verify"]) == commands.EXIT_USAGE
    assert main(["verify", "--f", GUNDERSEN_F]) == commands.EXIT_USAGE
    assert main(["profile", "polya", "--rmin", "5", "--rmax", "2"]) == commands.EXIT_USAGE


def test_verify_examples(capsys):
    assert main(["verify", "gundersen"]) == commands.EXIT_OK
    out = capsys.readouterr().out
    assert "[gundersen]" in out and "失败" not in out
    assert main(["verify", "polya"]) == commands.EXIT_OK


def test_verify_expressions(capsys):
    code = main(["verify", "--f", GUNDERSEN_F, "--g", GUNDERSEN_G, "--values", "1,0,∞,-1/8"])
    assert code == commands.EXIT_OK
    assert "[adhoc]" in capsys.readouterr().out


def test_table_for_exact_entries(capsys):
    entries = [catalog.build("polya"), catalog.build("gundersen")]
    assert commands.cmd_table(RunConfig(command="table"), entries) == commands.EXIT_OK
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert [row["id"] for row in rows] == ["polya", "gundersen"]
    assert rows[1]["psi"] == "8"
    assert commands.cmd_table(RunConfig(command="table", format="text"), entries) == commands.EXIT_OK
    assert "Φ_f" in capsys.readouterr().out


def test_check_writes_json(tmp_path, capsys):
    assert main(["check", "gundersen", "psi", "--out", str(tmp_path)]) == commands.EXIT_OK
    payload = json.loads((tmp_path / "gundersen_psi.json").read_text(encoding="utf-8"))
    assert payload["example"] == "gundersen"
    assert payload["results"]["psi"]["status"] == "holds"


def test_check_status_maps_to_exit_code(tmp_path, capsys):
    assert main(["check", "gundersen", "four", "--out", str(tmp_path)]) == commands.EXIT_FAILED
    assert main(["check", "polya", "four", "--out", str(tmp_path)]) == commands.EXIT_OK


def test_key_lemma_precondition_is_a_usage_error(tmp_path, capsys):
    assert main(["check", "polya", "keylemma", "--rcount", "4", "--out", str(tmp_path)]) == commands.EXIT_USAGE


def test_catalog_describe_and_export(tmp_path, capsys):
    assert main(["catalog", "describe", "polya"]) == commands.EXIT_OK
    assert json.loads(capsys.readouterr().out)["id"] == "polya"
    assert main(["catalog", "export", "gundersen", "--out", str(tmp_path)]) == commands.EXIT_OK
    descriptor = json.loads((tmp_path / "gundersen.json").read_text(encoding="utf-8"))
    assert descriptor["table"]["psi"] == "8"


@pytest.mark.slow
def test_profile_writes_series(tmp_path, capsys):
    code = main(["profile", "polya", "--rcount", "6", "--rmax", "12", "--format", "csv", "--out", str(tmp_path)])
    assert code == commands.EXIT_OK
    assert list(tmp_path.glob("polya*.csv"))
    assert "T(r, f)" in capsys.readouterr().out


@pytest.mark.slow
def test_profile_defaults_to_json_and_csv(tmp_path, capsys):
    code = main(["profile", "polya", "--rcount", "4", "--rmax", "8", "--out", str(tmp_path)])
    assert code == commands.EXIT_OK
    assert len(list(tmp_path.glob("polya*.json"))) == 1
    assert len(list(tmp_path.glob("polya*.csv"))) == 1
