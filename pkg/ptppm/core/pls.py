"""
Protection Location Set (PLS) search.

E(Phi) = min over every map cell g of sum_{x in Phi} Pr(x | Phi) d(g, x)

A PLS for anchor a is a window of the delta-location set in Hilbert-curve
order that contains a and satisfies E(Phi) >= e^eps * E_m. The window grows
outward from the anchor one pool cell at a time, taking whichever neighbor
along the curve is closer in rank to the anchor (ties to the lower rank).
The growth order does not depend on eps or E_m, so the searcher caches the
cumulative E and diameter sequences per (anchor, rotation) and answers every
threshold from them.
"""
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..constants import DEFAULT_E_M_DECAY, DEFAULT_E_M_MAX_ADJUSTMENTS, Rotation
from ..logger import get_logger
from .errors import Infeasible, ZeroMass
from .grid_map import GridMap, diameter, rank_table
from .mobility import DeltaLocationSet, ProbVector
from .retry import e_m_retrying, relaxed_e_m

logger = get_logger(__name__)

ALL_ROTATIONS: tuple[Rotation, ...] = (Rotation.R0, Rotation.R90, Rotation.R180, Rotation.R270)


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass(frozen=True)
class ProtectionLocationSet:
    """A PLS with its cached diameter D(Phi) and conditional error E(Phi)."""
    cells: tuple[int, ...]  # growth order, anchor first
    diameter_m: float
    e_value: float
    anchor: int
    rotation: Optional[Rotation] = None  # None when not produced by a curve search

    def __post_init__(self) -> None:
        if self.anchor not in self.cells:
            raise ValueError(f"anchor {self.anchor} not in PLS cells")

    def __len__(self) -> int:
        return len(self.cells)

    def satisfies(self, epsilon: float, e_m: float, slack: float = 0.0) -> bool:
        """Whether E(Phi) >= e^eps * E_m - slack."""
        return self.e_value >= math.exp(epsilon) * e_m - slack


@dataclass(frozen=True)
class _Growth:
    """Window growth for one (anchor, rotation): cells in order and running E / D."""
    cells: np.ndarray
    e_values: np.ndarray
    diameters: np.ndarray


# ============================================================================
# CONDITIONAL ERROR
# ============================================================================

def conditional_error(cells: Iterable[int], prior: ProbVector, grid_map: GridMap) -> float:
    """
    E(Phi): smallest prior-weighted mean distance from any map cell to Phi.

    Raises:
        ZeroMass: if the cells carry no prior mass.
    """
    idx = np.fromiter((int(c) for c in cells), dtype=np.int64)
    weights = prior.p[idx]
    total = weights.sum()
    if idx.size == 0 or total <= 0:
        raise ZeroMass("cell set carries no prior mass")
    return float((grid_map.distance_matrix[:, idx] @ weights).min() / total)


def make_pls(
    cells: Sequence[int],
    anchor: int,
    prior: ProbVector,
    grid_map: GridMap,
    rotation: Optional[Rotation] = None,
) -> ProtectionLocationSet:
    """Build a PLS from explicit cells, computing D and E."""
    cells = tuple(int(c) for c in cells)
    return ProtectionLocationSet(
        cells=cells,
        diameter_m=diameter(cells, grid_map),
        e_value=conditional_error(cells, prior, grid_map),
        anchor=int(anchor),
        rotation=rotation,
    )


# ============================================================================
# SEARCH
# ============================================================================

def _growth_order(ranks: np.ndarray, start: int) -> np.ndarray:
    """Positions of a rank-sorted pool in window-growth order from `start`."""
    order = [start]
    lo, hi = start - 1, start + 1
    anchor_rank = ranks[start]
    while lo >= 0 or hi < ranks.size:
        if hi >= ranks.size or (lo >= 0 and anchor_rank - ranks[lo] <= ranks[hi] - anchor_rank):
            order.append(lo)
            lo -= 1
        else:
            order.append(hi)
            hi += 1
    return np.asarray(order, dtype=np.int64)


class PLSSearcher:
    """
    Hilbert-window PLS search over one delta-location set and prior.

    Growth sequences are computed lazily per (anchor, rotation) and reused
    across thresholds, so E_m retries and all anchors of a step share them.
    """

    def __init__(
        self,
        pool: DeltaLocationSet,
        prior: ProbVector,
        grid_map: GridMap,
        rotations: Sequence[Rotation] = ALL_ROTATIONS,
    ) -> None:
        self.pool = pool
        self.prior = prior
        self.grid_map = grid_map
        self.rotations = tuple(Rotation(r) for r in rotations)
        self._pool_cells = pool.indices
        self._growth: dict[tuple[int, Rotation], _Growth] = {}

    def growth(self, anchor: int, rotation: Rotation) -> _Growth:
        key = (int(anchor), Rotation(rotation))
        if key not in self._growth:
            self._growth[key] = self._compute_growth(*key)
        return self._growth[key]

    def _compute_growth(self, anchor: int, rotation: Rotation) -> _Growth:
        ranks = rank_table(self.grid_map, rotation)[self._pool_cells]
        by_rank = np.argsort(ranks, kind="stable")
        sorted_cells = self._pool_cells[by_rank]
        start = int(np.flatnonzero(sorted_cells == anchor)[0])
        cells = sorted_cells[_growth_order(ranks[by_rank], start)]

        dist = self.grid_map.distance_matrix
        weights = self.prior.p[cells]
        # running sum_x Pr(x) d(g, x) for every guess g, one row per window size
        expected = np.cumsum(weights[:, None] * dist[cells, :], axis=0)
        mass = np.cumsum(weights)
        e_values = expected.min(axis=1) / mass

        sub = dist[np.ix_(cells, cells)]
        farthest_earlier = np.tril(sub, k=-1).max(axis=1)
        diameters = np.maximum.accumulate(farthest_earlier)
        return _Growth(cells=cells, e_values=e_values, diameters=diameters)

    def _first_window(self, growth: _Growth, threshold: float) -> Optional[int]:
        """Smallest window size >= 2 whose E reaches the threshold, rechecked directly."""
        for k in np.flatnonzero(growth.e_values >= threshold):
            if k < 1:
                continue
            if conditional_error(growth.cells[: k + 1], self.prior, self.grid_map) >= threshold:
                return int(k) + 1
        return None

    def search(self, anchor: int, epsilon: float, e_m: float) -> ProtectionLocationSet:
        """
        Minimum-diameter window over all rotations satisfying E >= e^eps * E_m.

        Ties: fewer cells, then the lower rotation.

        Raises:
            Infeasible: if no rotation yields a qualifying window.
        """
        if int(anchor) not in self.pool:
            raise ValueError(f"anchor {anchor} is not in the candidate pool")
        if epsilon < 0 or e_m <= 0:
            raise ValueError(f"need epsilon >= 0 and e_m > 0, got {epsilon}, {e_m}")
        threshold = math.exp(epsilon) * e_m

        best: Optional[tuple[float, int, int, Rotation]] = None
        for rotation in self.rotations:
            growth = self.growth(anchor, rotation)
            size = self._first_window(growth, threshold)
            if size is None:
                continue
            key = (float(growth.diameters[size - 1]), size, rotation.value, rotation)
            if best is None or key[:3] < best[:3]:
                best = key
        if best is None:
            raise Infeasible(
                f"no PLS for anchor {anchor} reaches E >= {threshold:.1f} m "
                f"(pool of {len(self.pool)} cells)"
            )

        _, size, _, rotation = best
        cells = self.growth(anchor, rotation).cells[:size]
        return make_pls(cells, anchor, self.prior, self.grid_map, rotation=rotation)


def search_pls(
    anchor: int,
    candidate_pool: DeltaLocationSet,
    prior: ProbVector,
    epsilon: float,
    e_m: float,
    grid_map: GridMap,
    rotations: Sequence[Rotation] = ALL_ROTATIONS,
) -> ProtectionLocationSet:
    """
    Smallest-diameter Hilbert-window PLS for the anchor.

    Raises:
        Infeasible: if even the whole pool fails the condition.
    """
    return PLSSearcher(candidate_pool, prior, grid_map, rotations).search(anchor, epsilon, e_m)


def search_pls_adaptive(
    searcher: PLSSearcher,
    anchor: int,
    epsilon: float,
    e_m: float,
    decay: float = DEFAULT_E_M_DECAY,
    max_adjustments: int = DEFAULT_E_M_MAX_ADJUSTMENTS,
) -> tuple[ProtectionLocationSet, float, int]:
    """
    PLS search with E_m relaxed by `decay` after each infeasible attempt.

    Returns:
        (pls, e_m actually used, number of adjustments made)

    Raises:
        Infeasible: if the last allowed E_m still fails.
    """
    for attempt in e_m_retrying(max_adjustments):
        with attempt:
            number = attempt.retry_state.attempt_number
            e_m_used = relaxed_e_m(e_m, number, decay)
            if number > 1:
                logger.warning("e_m_adjusted", anchor=int(anchor), e_m=e_m_used, adjustment=number - 1)
            pls = searcher.search(anchor, epsilon, e_m_used)
    return pls, e_m_used, number - 1
