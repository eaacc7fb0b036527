"""Core algorithms: geometry, mobility, budgets, PLS search, mechanisms, attacks, metrics."""
