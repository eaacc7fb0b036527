from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict

from ptppm.constants import (
    DEFAULT_CELL_SIZE_M,
    DEFAULT_TIME_STEP_S,
    DEFAULT_DELTA,
    DEFAULT_E_M,
    DEFAULT_E_M_DECAY,
    DEFAULT_E_M_MAX_ADJUSTMENTS,
    DEFAULT_EPSILON,
    DEFAULT_EPSILON_S,
    DEFAULT_SENSITIVITY_WEIGHT,
    NeighborMode,
)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="PTPPM_",
        case_sensitive=False,
        extra="ignore"
    )

    # Logging
    log_level: str = "INFO"

    # Map discretization
    cell_size_m: float = DEFAULT_CELL_SIZE_M
    time_step_s: float = DEFAULT_TIME_STEP_S

    # Release pipeline
    delta: float = DEFAULT_DELTA
    e_m: float = DEFAULT_E_M
    e_m_decay: float = DEFAULT_E_M_DECAY
    e_m_max_adjustments: int = DEFAULT_E_M_MAX_ADJUSTMENTS

    # Budget allocation
    epsilon_s: float = DEFAULT_EPSILON_S
    epsilon_default: float = DEFAULT_EPSILON
    alpha: float = DEFAULT_SENSITIVITY_WEIGHT
    beta: float = DEFAULT_SENSITIVITY_WEIGHT
    gamma: float = DEFAULT_SENSITIVITY_WEIGHT
    cap_adjacent_at_sensitive: bool = False
    neighbor_mode: NeighborMode = NeighborMode.OUT

    # Sweeps
    sweep_max_workers: int = 4


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
