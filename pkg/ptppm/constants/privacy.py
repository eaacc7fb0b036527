"""
Privacy Parameter Constants.

Defaults for the delta-location set, the inference-error bound, budget
allocation and the E_m adjustment loop.
"""

# ============================================================================
# DELTA-LOCATION SET
# ============================================================================

DEFAULT_DELTA = 0.2
"""Default probability mass allowed outside the delta-location set."""


# ============================================================================
# EXPECTED INFERENCE ERROR BOUND
# ============================================================================

DEFAULT_E_M = 620.0
"""Default lower bound on the attacker's expected inference error (meters)."""

DEFAULT_E_M_DECAY = 0.8
"""Factor applied to E_m after each infeasible PLS search."""

DEFAULT_E_M_MAX_ADJUSTMENTS = 5
"""Maximum number of E_m relaxations before a step is declared infeasible."""


# ============================================================================
# BUDGET ALLOCATION
# ============================================================================

DEFAULT_EPSILON_S = 1.0
"""Default total budget shared by the sensitive cells."""

DEFAULT_EPSILON = 1.0
"""Budget used for cells that are neither sensitive nor adjacent to one."""

DEFAULT_SENSITIVITY_WEIGHT = 1.0
"""Default value of each of the stay / frequency / semantic weights."""

SEMANTIC_CLASSES = (1, 2, 3, 4)
"""Allowed semantic sensitivity classes (1 = least sensitive)."""

DEFAULT_SEMANTIC_CLASS = 1
"""Semantic class assumed for cells without an explicit class."""


# ============================================================================
# ACCOUNTING
# ============================================================================

RELEASE_COST_FACTOR = 2.0
"""Each release within a PLS costs this many times its per-location budget."""
