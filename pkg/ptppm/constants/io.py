"""
Input/Output Constants.

File names, column orders and exit codes shared by the CLI and storage.
"""

# ============================================================================
# EXIT CODES
# ============================================================================

EXIT_OK = 0
"""Successful run."""

EXIT_CONFIG_ERROR = 2
"""Bad configuration, unreadable or unusable input."""

EXIT_INFEASIBLE = 3
"""A release step could not build a protection location set."""


# ============================================================================
# OUTPUT FILES
# ============================================================================

RECORDS_FILENAME = "records.jsonl"
SUMMARY_FILENAME = "summary.json"
SWEEP_FILENAME = "sweep.csv"
MANIFEST_FILENAME = "manifest.json"
INGEST_REPORT_FILENAME = "ingest_report.json"
BUDGET_FILENAME = "budget.json"
MAP_CONFIG_FILENAME = "map.json"
GRAPH_FILENAME = "graph.txt"

TOOL_NAME = "ptppm"
"""Tool name written into every output header."""


# ============================================================================
# TABLE SCHEMAS
# ============================================================================

SWEEP_COLUMNS = (
    "scenario",
    "epsilon_s",
    "e_m",
    "delta",
    "seed",
    "p_mean",
    "p_std",
    "q_mean",
    "q_std",
    "dset_size_mean",
    "pls_diam_mean",
    "attack_success_mean",
)
"""Column order of the sweep result table."""

TRAJECTORY_COLUMNS = ("t", "cell_index")
"""Column order of the normalized trajectory CSV."""


# ============================================================================
# RAW TRACE FORMATS
# ============================================================================

GEOLIFE_HEADER_LINES = 6
"""Preamble lines at the top of every Geolife .plt file."""

TDRIVE_TIME_FORMAT = "%Y-%m-%d %H:%M:%S"
"""Timestamp format of T-Drive records."""

GEOLIFE_TIME_FORMAT = "%Y-%m-%d %H:%M:%S"
"""Timestamp format of the joined Geolife date and time fields."""
