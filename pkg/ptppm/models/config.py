from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from ptppm.config import Settings, get_settings
from ptppm.constants import AttackMode, InfeasiblePolicy, MechanismTag, NeighborMode
from ptppm.core.budget import SensitivityWeights
from ptppm.core.grid_map import GridMap


# ============================================================================
# MAP
# ============================================================================

class MapConfig(BaseModel):
    """Grid definition. Omitted cell size / time step come from Settings."""
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    cell_size_m: Optional[float] = Field(default=None, gt=0)
    origin: Tuple[float, float] = (0.0, 0.0)
    """(latitude, longitude) of the south-west corner of cell 0."""
    time_step_s: Optional[float] = Field(default=None, gt=0)

    def to_grid_map(self, settings: Optional[Settings] = None) -> GridMap:
        settings = settings or get_settings()
        return GridMap(
            rows=self.rows,
            cols=self.cols,
            cell_size_m=self.cell_size_m if self.cell_size_m is not None else settings.cell_size_m,
            origin=self.origin,
            time_step_s=self.time_step_s if self.time_step_s is not None else settings.time_step_s,
        )

    @classmethod
    def from_grid_map(cls, grid_map: GridMap) -> "MapConfig":
        return cls(
            rows=grid_map.rows,
            cols=grid_map.cols,
            cell_size_m=grid_map.cell_size_m,
            origin=grid_map.origin,
            time_step_s=grid_map.time_step_s,
        )


# ============================================================================
# SCENARIO
# ============================================================================

class SyntheticConfig(BaseModel):
    """Biased random walks on the road graph."""
    n_trajectories: int = Field(default=40, ge=1)
    length: int = Field(default=30, ge=2)
    persistence: float = Field(default=0.8, ge=0.0, le=1.0)
    """Probability of keeping the current heading when the road allows it."""
    seed: int = 0


class ScenarioConfig(BaseModel):
    """
    One experiment setting: map, road graph, mobility history, sensitive
    cells and release parameters.

    File paths are resolved relative to the config file. Release parameters
    left out fall back to Settings.
    """
    name: str = "scenario"
    map: MapConfig
    graph: Optional[str] = None
    """Edge-list file; the 4-adjacent grid graph when omitted."""
    trajectories: List[str] = Field(default_factory=list)
    """Trajectory CSV files (`t,cell_index`) forming the mobility history."""
    synthetic: Optional[SyntheticConfig] = None

    sensitive: List[int] = Field(default_factory=list)
    semantic_classes: Dict[int, int] = Field(default_factory=dict)
    sensitive_class_threshold: Optional[int] = Field(default=None, ge=1, le=4)
    """Cells whose semantic class reaches this threshold are also sensitive."""

    alpha: Optional[float] = Field(default=None, ge=0)
    beta: Optional[float] = Field(default=None, ge=0)
    gamma: Optional[float] = Field(default=None, ge=0)
    epsilon_s: Optional[float] = Field(default=None, gt=0)
    epsilon_default: Optional[float] = Field(default=None, gt=0)
    epsilon_default_follows_epsilon_s: bool = False
    """Use epsilon_s as the budget of cells without an allocated budget."""
    e_m: Optional[float] = Field(default=None, gt=0)
    delta: Optional[float] = Field(default=None, gt=0, lt=1)
    neighbor_mode: Optional[NeighborMode] = None
    cap_adjacent_at_sensitive: Optional[bool] = None

    mechanism: MechanismTag = MechanismTag.PF
    attack_mode: AttackMode = AttackMode.OPTIMAL
    correlation_aware: bool = True
    """False replaces M by uniform propagation on the release side."""
    smoothing: float = Field(default=0.0, ge=0)
    attacker_perturbation: float = Field(default=0.0, ge=0, le=1)
    attacker_seed: int = 0
    on_infeasible: InfeasiblePolicy = InfeasiblePolicy.SKIP

    @field_validator("semantic_classes")
    @classmethod
    def _classes_in_range(cls, value: Dict[int, int]) -> Dict[int, int]:
        bad = {cell: c for cell, c in value.items() if c not in (1, 2, 3, 4)}
        if bad:
            raise ValueError(f"semantic classes must be in 1..4, got {bad}")
        return value

    @model_validator(mode="after")
    def _has_history(self) -> "ScenarioConfig":
        if not self.trajectories and self.synthetic is None:
            raise ValueError("scenario needs trajectory files or a synthetic section")
        return self

    def weights(self, settings: Optional[Settings] = None) -> SensitivityWeights:
        settings = settings or get_settings()
        return SensitivityWeights(
            alpha=settings.alpha if self.alpha is None else self.alpha,
            beta=settings.beta if self.beta is None else self.beta,
            gamma=settings.gamma if self.gamma is None else self.gamma,
        )


# ============================================================================
# SWEEP
# ============================================================================

class SweepConfig(BaseModel):
    """Parameter grid swept over one scenario. Each seed yields one row per grid point."""
    scenario: ScenarioConfig
    epsilon_s: List[float] = Field(min_length=1)
    e_m: List[float] = Field(min_length=1)
    delta: List[float] = Field(min_length=1)
    trials: int = Field(default=10, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)

    @field_validator("epsilon_s", "e_m")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if any(v <= 0 for v in value):
            raise ValueError("grid values must be > 0")
        return value

    @field_validator("delta")
    @classmethod
    def _probability(cls, value: List[float]) -> List[float]:
        if any(not 0 < v < 1 for v in value):
            raise ValueError("delta values must be in (0, 1)")
        return value
