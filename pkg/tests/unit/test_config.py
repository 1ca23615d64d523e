"""Unit tests for HerzkitSettings."""

import pytest
from pydantic import ValidationError

from herzkit import config as config_module
from herzkit.config import HerzkitSettings, get_config, load_config


def test_defaults():
    """Defaults match the documented numerical settings."""
    settings = HerzkitSettings(_env_file=None)

    assert settings.threads == 1
    assert settings.radial_rel_tol == 1e-10
    assert settings.truncation_window() == (-64, 64)
    assert settings.hard_cap == 256
    assert settings.grid_spacing_floor == 2.0 ** -12


def test_environment_overrides(monkeypatch):
    """HERZKIT_ variables override defaults."""
    monkeypatch.setenv("HERZKIT_THREADS", "4")
    monkeypatch.setenv("HERZKIT_LOG_LEVEL", "debug")

    settings = HerzkitSettings(_env_file=None)

    assert settings.threads == 4
    assert settings.log_level == "DEBUG"


@pytest.mark.parametrize("field,value", [
    ("threads", 0),
    ("log_level", "VERBOSE"),
    ("tail_tol", 0.0),
    ("gauss_order", 1),
    ("hard_cap", 4),
])
def test_invalid_values(field, value):
    """Out-of-range settings are rejected."""
    with pytest.raises(ValidationError):
        HerzkitSettings(_env_file=None, **{field: value})


def test_truncation_window_clipped_to_hard_cap():
    """The initial window never exceeds the hard cap."""
    settings = HerzkitSettings(_env_file=None, k_lo=-500, k_hi=10, hard_cap=100)

    assert settings.truncation_window() == (-100, 10)


def test_truncation_window_must_be_ordered():
    """k_lo above k_hi is a configuration error."""
    settings = HerzkitSettings(_env_file=None, k_lo=5, k_hi=-5)

    with pytest.raises(ValueError):
        settings.truncation_window()


def test_load_config_sets_global(monkeypatch):
    """load_config replaces the global instance returned by get_config."""
    monkeypatch.setattr(config_module, "config", None)

    loaded = load_config(threads=3)

    assert get_config() is loaded
    assert loaded.threads == 3
