from __future__ import annotations

from argparse import Namespace
from pathlib import Path

import numpy as np
import pytest

from app.core.config import ConfigError, RunConfig, read_config_file


def test_defaults():
    config = RunConfig()
    assert config.rcount == 16
    assert config.geometric
    assert config.format == "json"
    assert config.out == Path("out")


@pytest.mark.parametrize("changes", [
    {"tol_quad": 0.0},
    {"slack_floor": -1.0},
    {"rmin": -2.0},
    {"rmin": 5.0, "rmax": 5.0},
    {"rcount": 3},
    {"format": "xml"},
])
def test_invalid_values_are_rejected(changes):
    with pytest.raises(ConfigError):
        RunConfig(**changes)


def test_grid_uses_defaults_and_overrides():
    grid = RunConfig(rcount=5).grid(2.0, 32.0)
    assert np.allclose(grid, [2.0, 4.0, 8.0, 16.0, 32.0])
    linear = RunConfig(rcount=4, geometric=False, rmax=8.0).grid(2.0, 32.0)
    assert np.allclose(linear, [2.0, 4.0, 6.0, 8.0])
    with pytest.raises(ConfigError):
        RunConfig(rmin=40.0).grid(2.0, 32.0)


def test_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# run settings\nrcount = 8\n--slack-floor = 2.5  # wider\ngeometric = no\nfmt = csv\n",
                    encoding="utf-8")
    assert read_config_file(path) == {"rcount": "8", "slack_floor": "2.5", "geometric": "no", "format": "csv"}
    config = RunConfig.from_sources(None, path)
    assert config.rcount == 8 and config.slack_floor == 2.5
    assert not config.geometric and config.format == "csv"


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("rcount = 8\nout = results\n", encoding="utf-8")
    flags = Namespace(command="profile", example="polya", rcount=12, rmax=None, out=None)
    config = RunConfig.from_sources(flags, path)
    assert config.rcount == 12
    assert config.out == Path("results")
    assert config.example == "polya" and config.rmax is None


def test_bad_config_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.conf")
    path = tmp_path / "broken.conf"
    path.write_text("rcount 8\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_config_file(path)
    path.write_text("colour = blue\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig.from_sources(None, path)
    path.write_text("rcount = many\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig.from_sources(None, path)


def test_with_overrides():
    config = RunConfig().with_overrides(rcount="10", geometric="true")
    assert config.rcount == 10 and config.geometric
