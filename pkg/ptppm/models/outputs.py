from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from ptppm import __version__
from ptppm.constants import TOOL_NAME


# ============================================================================
# HEADER
# ============================================================================

class Header(BaseModel):
    """Provenance carried by every output file. No wall-clock time, so reruns are byte-identical."""
    tool: str = TOOL_NAME
    version: str = __version__
    config_hash: str
    command: str


# ============================================================================
# RUN OUTPUTS
# ============================================================================

class PLSDump(BaseModel):
    cells: List[int]
    anchor: int
    diameter_m: float
    e_value: float
    rotation: Optional[int] = None


class ReleaseRecordModel(BaseModel):
    """One line of records.jsonl."""
    t: int
    true_cell: int
    protected_cell: int
    dset_size: int
    released: Optional[int]
    epsilon_used: float
    e_m_used: Optional[float]
    e_m_adjustments: int
    mechanism: str
    pls: Optional[PLSDump] = None
    posterior: List[float] = Field(default_factory=list)


class AttackSummary(BaseModel):
    """Trajectory means of the exact per-step metrics under one attack."""
    privacy_mean: float
    success_mean: float
    realized_error_mean: Optional[float] = None
    realized_hit_rate: Optional[float] = None


class RunSummary(BaseModel):
    header: Header
    user_id: str
    mechanism: str
    pls_stage: bool
    note: str = ""
    steps: int
    skipped_steps: int
    per_step_cost: List[float]
    total_budget_consumed: float
    max_step_epsilon: float
    epsilon_s: float
    claimed_trajectory_bound: float
    """2 eps_s, the trajectory-level bound the budget split aims at."""
    qos_loss_mean: float
    dset_size_mean: float
    pls_diameter_mean: Optional[float]
    attacks: Dict[str, AttackSummary]


class AttackTraceStep(BaseModel):
    t: int
    released: Optional[int]
    inferred: int
    expected_error_m: float
    success_prob: float
    hit: Optional[bool] = None
    posterior_max: float
    posterior_support: int


class AttackTrace(BaseModel):
    header: Header
    mode: str
    steps: List[AttackTraceStep]


# ============================================================================
# BUDGET
# ============================================================================

class SensitivityProfileModel(BaseModel):
    stay_duration: float
    access_frequency: float
    semantic_class: int
    sensitivity: float


class BudgetDocument(BaseModel):
    header: Header
    epsilon_s: float
    sensitive: Dict[int, float]
    adjacent: Dict[int, float]
    resolved: Dict[int, float]
    profiles: Dict[int, SensitivityProfileModel] = Field(default_factory=dict)
    pair_evaluations: int = 0


# ============================================================================
# INGEST / SWEEP
# ============================================================================

class ParseIssueModel(BaseModel):
    line_no: int
    line: str
    reason: str


class IngestReport(BaseModel):
    header: Header
    input: str
    format: str
    lines_total: int
    records_parsed: int
    lines_dropped: int
    fixes_out_of_bounds: int
    trajectories: Dict[str, int]
    """Discretized step count per user id."""
    issues: List[ParseIssueModel] = Field(default_factory=list)


class SweepRow(BaseModel):
    scenario: str
    epsilon_s: float
    e_m: float
    delta: float
    seed: int
    p_mean: float
    p_std: float
    q_mean: float
    q_std: float
    dset_size_mean: float
    pls_diam_mean: float
    attack_success_mean: float


class Manifest(BaseModel):
    header: Header
    scenario: str
    seeds: List[int]
    trials: int
    grid_points: int
    failed_points: List[Dict[str, float]] = Field(default_factory=list)
    files: List[str] = Field(default_factory=list)
