"""
Engine Constants Package.

This package centralizes all constants used throughout the engine,
organized by concern. Everything is re-exported here:

    from ptppm.constants import MechanismTag, DEFAULT_DELTA
    from ptppm.constants.enums import MechanismTag
    from ptppm.constants.privacy import DEFAULT_DELTA
"""

# ============================================================================
# ENUMERATIONS
# ============================================================================

from .enums import (
    MechanismTag,
    AttackMode,
    Rotation,
    NeighborMode,
    TraceFormat,
    InfeasiblePolicy,
)

# ============================================================================
# GRID
# ============================================================================

from .grid import (
    DEFAULT_CELL_SIZE_M,
    DEFAULT_TIME_STEP_S,
    METERS_PER_DEGREE_LAT,
    EDGE_TOLERANCE,
    MAX_HILBERT_ORDER,
)

# ============================================================================
# PRIVACY PARAMETERS
# ============================================================================

from .privacy import (
    DEFAULT_DELTA,
    DEFAULT_E_M,
    DEFAULT_E_M_DECAY,
    DEFAULT_E_M_MAX_ADJUSTMENTS,
    DEFAULT_EPSILON_S,
    DEFAULT_EPSILON,
    DEFAULT_SENSITIVITY_WEIGHT,
    SEMANTIC_CLASSES,
    DEFAULT_SEMANTIC_CLASS,
    RELEASE_COST_FACTOR,
)

# ============================================================================
# NUMERICS
# ============================================================================

from .numerics import (
    PROB_SUM_TOLERANCE,
    BUDGET_SUM_TOLERANCE,
    MASS_TOLERANCE,
    DP_RATIO_TOLERANCE,
)

# ============================================================================
# INPUT / OUTPUT
# ============================================================================

from .io import (
    EXIT_OK,
    EXIT_CONFIG_ERROR,
    EXIT_INFEASIBLE,
    RECORDS_FILENAME,
    SUMMARY_FILENAME,
    SWEEP_FILENAME,
    MANIFEST_FILENAME,
    INGEST_REPORT_FILENAME,
    BUDGET_FILENAME,
    MAP_CONFIG_FILENAME,
    GRAPH_FILENAME,
    TOOL_NAME,
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    GEOLIFE_HEADER_LINES,
    TDRIVE_TIME_FORMAT,
    GEOLIFE_TIME_FORMAT,
)

# ============================================================================
# PUBLIC API
# ============================================================================

__all__ = [
    # Enums
    "MechanismTag",
    "AttackMode",
    "Rotation",
    "NeighborMode",
    "TraceFormat",
    "InfeasiblePolicy",

    # Grid
    "DEFAULT_CELL_SIZE_M",
    "DEFAULT_TIME_STEP_S",
    "METERS_PER_DEGREE_LAT",
    "EDGE_TOLERANCE",
    "MAX_HILBERT_ORDER",

    # Privacy
    "DEFAULT_DELTA",
    "DEFAULT_E_M",
    "DEFAULT_E_M_DECAY",
    "DEFAULT_E_M_MAX_ADJUSTMENTS",
    "DEFAULT_EPSILON_S",
    "DEFAULT_EPSILON",
    "DEFAULT_SENSITIVITY_WEIGHT",
    "SEMANTIC_CLASSES",
    "DEFAULT_SEMANTIC_CLASS",
    "RELEASE_COST_FACTOR",

    # Numerics
    "PROB_SUM_TOLERANCE",
    "BUDGET_SUM_TOLERANCE",
    "MASS_TOLERANCE",
    "DP_RATIO_TOLERANCE",

    # I/O
    "EXIT_OK",
    "EXIT_CONFIG_ERROR",
    "EXIT_INFEASIBLE",
    "RECORDS_FILENAME",
    "SUMMARY_FILENAME",
    "SWEEP_FILENAME",
    "MANIFEST_FILENAME",
    "INGEST_REPORT_FILENAME",
    "BUDGET_FILENAME",
    "MAP_CONFIG_FILENAME",
    "GRAPH_FILENAME",
    "TOOL_NAME",
    "SWEEP_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "GEOLIFE_HEADER_LINES",
    "TDRIVE_TIME_FORMAT",
    "GEOLIFE_TIME_FORMAT",
]
