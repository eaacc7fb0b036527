# Public interface for Pydantic data models
from .config import (
    MapConfig,
    SyntheticConfig,
    ScenarioConfig,
    SweepConfig,
)
from .outputs import (
    Header,
    PLSDump,
    ReleaseRecordModel,
    AttackSummary,
    RunSummary,
    AttackTraceStep,
    AttackTrace,
    SensitivityProfileModel,
    BudgetDocument,
    ParseIssueModel,
    IngestReport,
    SweepRow,
    Manifest,
)

__all__ = [
    "MapConfig",
    "SyntheticConfig",
    "ScenarioConfig",
    "SweepConfig",
    "Header",
    "PLSDump",
    "ReleaseRecordModel",
    "AttackSummary",
    "RunSummary",
    "AttackTraceStep",
    "AttackTrace",
    "SensitivityProfileModel",
    "BudgetDocument",
    "ParseIssueModel",
    "IngestReport",
    "SweepRow",
    "Manifest",
]
