"""
Unit tests for ptppm/config.py
"""
from unittest.mock import patch

from ptppm.config import Settings, get_settings
from ptppm.constants import DEFAULT_CELL_SIZE_M, DEFAULT_DELTA, DEFAULT_E_M, NeighborMode


def test_defaults():
    settings = Settings(_env_file=None)
    assert settings.cell_size_m == DEFAULT_CELL_SIZE_M
    assert settings.delta == DEFAULT_DELTA
    assert settings.e_m == DEFAULT_E_M
    assert settings.neighbor_mode is NeighborMode.OUT
    assert settings.cap_adjacent_at_sensitive is False


def test_env_overrides():
    env = {"PTPPM_DELTA": "0.05", "PTPPM_NEIGHBOR_MODE": "union", "PTPPM_E_M_MAX_ADJUSTMENTS": "5"}
    with patch.dict("os.environ", env):
        settings = Settings(_env_file=None)
    assert settings.delta == 0.05
    assert settings.neighbor_mode is NeighborMode.UNION
    assert settings.e_m_max_adjustments == 5


def test_get_settings_is_cached():
    assert get_settings() is get_settings()
    with patch.dict("os.environ", {"PTPPM_LOG_LEVEL": "DEBUG"}):
        assert get_settings().log_level == "INFO"
        get_settings.cache_clear()
        assert get_settings().log_level == "DEBUG"
