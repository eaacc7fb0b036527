"""
Mobility model: trajectories, the Markov transition matrix, prior
propagation, Bayesian posterior updates, the delta-location set and the
surrogate location.
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from ..constants import MASS_TOLERANCE, PROB_SUM_TOLERANCE
from ..logger import get_logger
from .errors import DimensionMismatch, EmptyInput, ZeroEvidence
from .grid_map import CellId, GridMap

logger = get_logger(__name__)


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass(frozen=True)
class Trajectory:
    """A user's discretized trajectory: (timestep, cell) pairs in time order."""
    user_id: str
    steps: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        steps = tuple((int(t), int(c)) for t, c in self.steps)
        for (t_prev, _), (t_next, _) in zip(steps, steps[1:]):
            if t_next <= t_prev:
                raise ValueError(f"timesteps must be strictly increasing ({t_prev} then {t_next})")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def from_cells(cls, cells: Iterable[int], user_id: str = "0", start: int = 0) -> "Trajectory":
        return cls(user_id=user_id, steps=tuple((start + k, int(c)) for k, c in enumerate(cells)))

    @property
    def cells(self) -> list[CellId]:
        return [CellId(c) for _, c in self.steps]

    @property
    def timesteps(self) -> list[int]:
        return [t for t, _ in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True, eq=False)
class ProbVector:
    """Probability distribution over map cells."""
    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DimensionMismatch(f"probability vector must be 1-D and non-empty, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > PROB_SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def normalized(cls, weights: np.ndarray) -> "ProbVector":
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if total <= 0:
            raise ValueError("cannot normalize weights with zero total mass")
        return cls(w / total)

    @classmethod
    def uniform(cls, n: int) -> "ProbVector":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def one_hot(cls, n: int, cell: int) -> "ProbVector":
        p = np.zeros(n)
        p[int(cell)] = 1.0
        return cls(p)

    def __len__(self) -> int:
        return self.p.size

    def __getitem__(self, cell: int) -> float:
        return float(self.p[cell])

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.p > 0)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """
    Row-stochastic first-order Markov matrix M with the counts N it came from.

    Rows without any observed transition are one-hot self transitions.
    """
    counts: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] != probs.shape[1] or counts.shape != probs.shape:
            raise DimensionMismatch(f"counts {counts.shape} and probs {probs.shape} must be equal squares")
        if np.any(probs < 0) or np.any(np.abs(probs.sum(axis=1) - 1.0) > PROB_SUM_TOLERANCE):
            raise ValueError("transition probabilities must be non-negative with rows summing to 1")
        for arr in (counts, probs):
            arr.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "probs", probs)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def from_counts(cls, counts: np.ndarray, smoothing: float = 0.0) -> "TransitionMatrix":
        """Row-normalize counts (plus an optional pseudocount on every entry)."""
        counts = np.asarray(counts, dtype=float)
        smoothed = counts + smoothing if smoothing > 0 else counts
        row_sums = smoothed.sum(axis=1, keepdims=True)
        probs = np.divide(smoothed, row_sums, out=np.zeros_like(smoothed), where=row_sums > 0)
        empty = np.flatnonzero(row_sums[:, 0] == 0)
        probs[empty, empty] = 1.0
        return cls(counts=counts, probs=probs)

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> "TransitionMatrix":
        probs = np.asarray(probs, dtype=float)
        return cls(counts=np.zeros_like(probs), probs=probs)

    @classmethod
    def uniform(cls, n: int) -> "TransitionMatrix":
        """Every cell equally likely next; models a user with no mobility correlation."""
        return cls.from_probs(np.full((n, n), 1.0 / n))

    @classmethod
    def identity(cls, n: int) -> "TransitionMatrix":
        return cls.from_probs(np.eye(n))

    def perturbed(self, strength: float, rng: np.random.Generator) -> "TransitionMatrix":
        """
        Mix each row with a random stochastic row.

        Args:
            strength: Weight of the random row, in [0, 1].
            rng: Generator supplying the random rows.
        """
        if not 0.0 <= strength <= 1.0:
            raise ValueError(f"strength must be in [0, 1], got {strength}")
        noise = rng.dirichlet(np.ones(self.n_states), size=self.n_states)
        mixed = (1.0 - strength) * self.probs + strength * noise
        return TransitionMatrix(counts=self.counts, probs=mixed / mixed.sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class DeltaLocationSet:
    """Smallest set of cells holding at least 1 - delta of the prior mass."""
    cells: tuple[int, ...]  # ascending CellId
    delta: float
    covered_mass: float

    def __contains__(self, cell: object) -> bool:
        return int(cell) in self.cells  # type: ignore[arg-type]

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    @property
    def indices(self) -> np.ndarray:
        return np.asarray(self.cells, dtype=np.int64)


class Likelihood(Protocol):
    """Anything that yields f(released | x) for every cell x."""

    def likelihood(self, released: int) -> np.ndarray: ...


# ============================================================================
# OPERATIONS
# ============================================================================

def build_transition_matrix(
    trajectories: Sequence[Trajectory],
    grid_map: GridMap,
    smoothing: float = 0.0,
) -> TransitionMatrix:
    """
    Count consecutive step pairs over all trajectories and row-normalize.

    Raises:
        EmptyInput: if no trajectory has at least two steps.
    """
    sources: list[np.ndarray] = []
    targets: list[np.ndarray] = []
    for trajectory in trajectories:
        cells = np.asarray(trajectory.cells, dtype=np.int64)
        if cells.size >= 2:
            sources.append(cells[:-1])
            targets.append(cells[1:])
    if not sources:
        raise EmptyInput("need at least one trajectory with two or more steps")

    src = np.concatenate(sources)
    dst = np.concatenate(targets)
    if src.min() < 0 or max(src.max(), dst.max()) >= grid_map.n_cells or dst.min() < 0:
        raise DimensionMismatch(f"trajectory cells outside [0, {grid_map.n_cells})")

    counts = np.zeros((grid_map.n_cells, grid_map.n_cells))
    np.add.at(counts, (src, dst), 1.0)
    logger.debug("transition_matrix_built", transitions=int(src.size), n_cells=grid_map.n_cells)
    return TransitionMatrix.from_counts(counts, smoothing=smoothing)


def propagate_prior(posterior_prev: ProbVector, m: TransitionMatrix) -> ProbVector:
    """
    Next-step prior p- = p+ . M.

    Raises:
        DimensionMismatch: if the vector and matrix sizes differ.
    """
    if len(posterior_prev) != m.n_states:
        raise DimensionMismatch(f"vector of size {len(posterior_prev)} vs {m.n_states}-state matrix")
    return ProbVector.normalized(posterior_prev.p @ m.probs)


def posterior(prior: ProbVector, released: int, mech: Likelihood) -> ProbVector:
    """
    Bayes update of the prior given the released cell.

    Raises:
        ZeroEvidence: if no prior-supported cell could have produced `released`.
    """
    likelihood = np.asarray(mech.likelihood(int(released)), dtype=float)
    if likelihood.shape != prior.p.shape:
        raise DimensionMismatch(f"likelihood of shape {likelihood.shape} vs prior of size {len(prior)}")
    joint = prior.p * likelihood
    evidence = joint.sum()
    if evidence <= 0:
        raise ZeroEvidence(f"released cell {released} has zero likelihood under the prior")
    return ProbVector.normalized(joint)


def delta_location_set(prior: ProbVector, delta: float) -> DeltaLocationSet:
    """
    Greedy minimum-cardinality cell set with prior mass >= 1 - delta.

    Cells are taken in descending prior order, ties by ascending CellId.
    Zero-mass cells are never selected.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    p = prior.p
    order = np.lexsort((np.arange(p.size), -p))
    order = order[p[order] > 0]
    cumulative = np.cumsum(p[order])
    reached = np.flatnonzero(cumulative >= 1.0 - delta - MASS_TOLERANCE)
    k = int(reached[0]) + 1 if reached.size else order.size
    chosen = np.sort(order[:k])
    return DeltaLocationSet(
        cells=tuple(int(c) for c in chosen),
        delta=float(delta),
        covered_mass=float(cumulative[k - 1]),
    )


def surrogate_location(true_cell: int, dset: DeltaLocationSet, grid_map: GridMap) -> CellId:
    """The true cell if it is in the set, else the nearest set cell (ties by ascending CellId)."""
    if not len(dset):
        raise EmptyInput("delta-location set is empty")
    if int(true_cell) in dset:
        return CellId(int(true_cell))
    grid_map.check_cell(true_cell)
    idx = dset.indices
    return CellId(int(idx[np.argmin(grid_map.distance_matrix[int(true_cell), idx])]))


def initial_posterior(grid_map: GridMap, cell: Optional[int] = None) -> ProbVector:
    """Uniform over the map, or one-hot when a starting cell is known."""
    if cell is None:
        return ProbVector.uniform(grid_map.n_cells)
    return ProbVector.one_hot(grid_map.n_cells, cell)
