"""
Personalized privacy budget allocation.

1. Sensitivity of each sensitive cell: S = alpha L + beta F + gamma C
   (L stay duration, F access frequency, C semantic class 1..4 used raw).
2. Sensitive budgets inversely proportional to S, summing to eps_s.
3. Each road-graph neighbor j of a sensitive cell i gets
   eps'_j = d(i, j) * sum_k 1/d(i, k) * eps_i.
4. A cell holding several budgets keeps the smallest.
"""
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from ..constants import DEFAULT_SEMANTIC_CLASS, DEFAULT_SENSITIVITY_WEIGHT, NeighborMode, SEMANTIC_CLASSES
from ..logger import get_logger
from .errors import EmptyInput, EmptyWindow, NonpositiveSensitivity, ZeroDistance
from .grid_map import GridMap, distance
from .mobility import Trajectory
from .road_graph import RoadGraph, adjacent_nodes

logger = get_logger(__name__)


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass(frozen=True)
class SensitivityWeights:
    alpha: float = DEFAULT_SENSITIVITY_WEIGHT
    beta: float = DEFAULT_SENSITIVITY_WEIGHT
    gamma: float = DEFAULT_SENSITIVITY_WEIGHT

    def __post_init__(self) -> None:
        values = (self.alpha, self.beta, self.gamma)
        if min(values) < 0 or max(values) == 0:
            raise ValueError(f"weights must be >= 0 and not all zero, got {values}")


@dataclass(frozen=True)
class SensitivityProfile:
    """Inputs and score of one sensitive cell."""
    cell: int
    stay_duration: float
    access_frequency: float
    semantic_class: int
    sensitivity: float


@dataclass
class BudgetAllocation:
    """Per-cell budgets produced by run_ppba."""
    epsilon_s: float
    sensitive: dict[int, float]
    adjacent: dict[int, float]
    resolved: dict[int, float]
    profiles: dict[int, SensitivityProfile] = field(default_factory=dict)
    pair_evaluations: int = 0

    def budget_for(self, cell: int, default: float) -> float:
        """Resolved budget of a cell, or `default` when it has none."""
        return self.resolved.get(int(cell), default)

    @classmethod
    def constant(cls, epsilon: float) -> "BudgetAllocation":
        """No budgeted cells; every lookup falls back to its default."""
        return cls(epsilon_s=epsilon, sensitive={}, adjacent={}, resolved={})


# ============================================================================
# SENSITIVITY INPUTS
# ============================================================================

def stay_duration(cell: int, trajectories: Sequence[Trajectory], window: tuple[int, int]) -> float:
    """
    Average fraction of the timesteps in [t1, t2) spent at `cell`.

    Raises:
        EmptyWindow: if t2 <= t1.
    """
    t1, t2 = window
    if t2 <= t1:
        raise EmptyWindow(f"window [{t1}, {t2}) is empty")
    if not trajectories:
        raise EmptyInput("no trajectories")
    cell = int(cell)
    fractions = [
        sum(1 for t, c in trajectory.steps if t1 <= t < t2 and c == cell) / (t2 - t1)
        for trajectory in trajectories
    ]
    return sum(fractions) / len(fractions)


def access_frequency(cell: int, trajectories: Sequence[Trajectory]) -> float:
    """
    Visits to `cell` over all visits, one visit per trajectory step.

    Raises:
        EmptyInput: if the trajectories have no steps at all.
    """
    total = sum(len(trajectory) for trajectory in trajectories)
    if total == 0:
        raise EmptyInput("no visits recorded")
    visits = sum(1 for trajectory in trajectories for _, c in trajectory.steps if c == int(cell))
    return visits / total


def sensitivity(
    stay: float,
    frequency: float,
    semantic_class: int,
    weights: SensitivityWeights = SensitivityWeights(),
) -> float:
    """S = alpha L + beta F + gamma C."""
    if semantic_class not in SEMANTIC_CLASSES:
        raise ValueError(f"semantic class must be one of {SEMANTIC_CLASSES}, got {semantic_class}")
    return weights.alpha * stay + weights.beta * frequency + weights.gamma * semantic_class


# ============================================================================
# ALLOCATION
# ============================================================================

def allocate_sensitive(sensitivities: Mapping[int, float], epsilon_s: float) -> dict[int, float]:
    """
    eps_i = (1/S_i) / sum_k (1/S_k) * eps_s.

    Raises:
        NonpositiveSensitivity: if any score is <= 0.
    """
    if not sensitivities:
        raise EmptyInput("no sensitive cells")
    if epsilon_s <= 0:
        raise ValueError(f"epsilon_s must be > 0, got {epsilon_s}")
    bad = [cell for cell, score in sensitivities.items() if score <= 0]
    if bad:
        raise NonpositiveSensitivity(f"non-positive sensitivity at cell(s) {sorted(bad)}")
    inverse_total = sum(1.0 / score for score in sensitivities.values())
    return {int(cell): (1.0 / score) / inverse_total * epsilon_s for cell, score in sensitivities.items()}


def allocate_adjacent(
    sensitive_cell: int,
    eps_i: float,
    neighbors: Iterable[int],
    grid_map: GridMap,
    cap_at_sensitive: bool = False,
) -> dict[int, float]:
    """
    eps'_j = d(i, j) * sum_k 1/d(i, k) * eps_i over the neighbors of i.

    With `cap_at_sensitive`, every eps'_j is clamped to eps_i.

    Raises:
        ZeroDistance: if a neighbor is the sensitive cell itself.
    """
    neighbors = sorted(int(j) for j in neighbors)
    if not neighbors:
        raise EmptyInput(f"cell {sensitive_cell} has no neighbors")
    dists = {j: distance(sensitive_cell, j, grid_map) for j in neighbors}
    if any(d <= 0 for d in dists.values()):
        raise ZeroDistance(f"a neighbor coincides with sensitive cell {sensitive_cell}")
    inverse_total = sum(1.0 / d for d in dists.values())
    budgets = {j: d * inverse_total * eps_i for j, d in dists.items()}
    if cap_at_sensitive:
        budgets = {j: min(b, eps_i) for j, b in budgets.items()}
    return budgets


def sensitive_from_classes(semantic_classes: Mapping[int, int], threshold: int) -> list[int]:
    """Cells whose semantic class is at least `threshold`, ascending."""
    return sorted(int(cell) for cell, c in semantic_classes.items() if c >= threshold)


def run_ppba(
    trajectory: Trajectory | Sequence[Trajectory],
    graph: RoadGraph,
    sensitive_cells: Sequence[int],
    epsilon_s: float,
    weights: SensitivityWeights,
    window: Optional[tuple[int, int]],
    grid_map: GridMap,
    semantic_classes: Optional[Mapping[int, int]] = None,
    neighbor_mode: NeighborMode = NeighborMode.OUT,
    cap_adjacent_at_sensitive: bool = False,
) -> BudgetAllocation:
    """
    Full budget allocation over the sensitive cells and their neighbors.

    Args:
        trajectory: History used for stay duration and access frequency.
        graph: Road graph supplying the neighbor sets.
        sensitive_cells: Designated sensitive cells (graph vertices).
        epsilon_s: Total budget of the sensitive cells.
        weights: Sensitivity weights.
        window: [t1, t2) for stay duration; defaults to the span of the history.
        grid_map: Map supplying neighbor distances.
        semantic_classes: Class per cell; missing cells use the default class.
        neighbor_mode: Out-neighbors or the union of in and out neighbors.
        cap_adjacent_at_sensitive: Clamp neighbor budgets to the sensitive budget.
    """
    trajectories = [trajectory] if isinstance(trajectory, Trajectory) else list(trajectory)
    cells = sorted(set(int(c) for c in sensitive_cells))
    if not cells:
        raise EmptyInput("no sensitive cells")
    classes = semantic_classes or {}
    if window is None:
        times = [t for tr in trajectories for t in tr.timesteps]
        if not times:
            raise EmptyInput("history has no steps")
        window = (min(times), max(times) + 1)

    profiles: dict[int, SensitivityProfile] = {}
    for cell in cells:
        stay = stay_duration(cell, trajectories, window)
        freq = access_frequency(cell, trajectories)
        c = int(classes.get(cell, DEFAULT_SEMANTIC_CLASS))
        profiles[cell] = SensitivityProfile(cell, stay, freq, c, sensitivity(stay, freq, c, weights))
    sensitive = allocate_sensitive({cell: p.sensitivity for cell, p in profiles.items()}, epsilon_s)

    adjacent: dict[int, float] = {}
    pairs = 0
    for cell in cells:
        neighbors = adjacent_nodes(cell, graph, neighbor_mode)
        if not neighbors:
            continue
        pairs += len(neighbors)
        for j, budget in allocate_adjacent(cell, sensitive[cell], neighbors, grid_map, cap_adjacent_at_sensitive).items():
            adjacent[j] = min(budget, adjacent.get(j, budget))

    resolved = dict(sensitive)
    for j, budget in adjacent.items():
        resolved[j] = min(budget, resolved.get(j, budget))

    logger.info(
        "budget_allocated",
        sensitive=len(sensitive),
        adjacent=len(adjacent),
        epsilon_s=epsilon_s,
        pair_evaluations=pairs,
    )
    return BudgetAllocation(
        epsilon_s=float(epsilon_s),
        sensitive=sensitive,
        adjacent=adjacent,
        resolved=dict(sorted(resolved.items())),
        profiles=profiles,
        pair_evaluations=pairs,
    )
