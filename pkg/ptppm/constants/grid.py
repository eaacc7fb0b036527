"""
Map Discretization Constants.

Cell geometry, time binning and projection parameters.
"""

# ============================================================================
# GRID DEFAULTS
# ============================================================================

DEFAULT_CELL_SIZE_M = 620.0
"""Default side of a square map cell (meters)."""

DEFAULT_TIME_STEP_S = 177.0
"""Default width of a discretization time bin (seconds)."""


# ============================================================================
# PROJECTION
# ============================================================================

METERS_PER_DEGREE_LAT = 111_320.0
"""Meters per degree of latitude used by the equirectangular projection."""

EDGE_TOLERANCE = 1e-9
"""Relative slack (in cell units) when deciding which cell owns an edge point."""


# ============================================================================
# HILBERT CURVE
# ============================================================================

MAX_HILBERT_ORDER = 16
"""Largest supported curve order (65536 x 65536 square)."""
