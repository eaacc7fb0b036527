"""
Numerical Tolerance Constants.
"""

PROB_SUM_TOLERANCE = 1e-12
"""Allowed deviation of a probability vector's sum from 1."""

BUDGET_SUM_TOLERANCE = 1e-9
"""Allowed deviation of allocated sensitive budgets from the total."""

MASS_TOLERANCE = 1e-12
"""Slack when comparing cumulative prior mass against 1 - delta."""

DP_RATIO_TOLERANCE = 1e-9
"""Relative slack when checking a probability ratio against its bound."""
