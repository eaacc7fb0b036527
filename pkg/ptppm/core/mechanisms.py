"""
Release mechanisms over a protection location set.

- pf_distribution: output law of permute-and-flip with utility
  d_sm - d(x, x'); `closed_form=True` gives the normalized exponential
  weights exp(-eps (d - d_sm) / 2D) instead
- exp_mechanism_distribution: exponential mechanism over the PLS
- uniform_dls_distribution: uniform release over the delta-location set
- identity_distribution: point mass at the protected cell

A ReleaseChannel gathers, for every map cell, the distribution that would
be used were the user there. Attackers and metrics read f(x'|x) from it.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import softmax

from ..constants import DP_RATIO_TOLERANCE, MechanismTag
from .errors import DegeneratePLS, MissingMechanism
from .grid_map import CellId, GridMap
from .mobility import DeltaLocationSet
from .pls import ProtectionLocationSet


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass(frozen=True, eq=False)
class PerturbationDistribution:
    """f(. | true_cell) over an ordered support."""
    true_cell: int
    support: tuple[int, ...]
    probs: np.ndarray
    mechanism_tag: MechanismTag
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(self.support),):
            raise ValueError(f"{probs.size} probabilities for a support of {len(self.support)} cells")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"release probabilities must be non-negative and sum to 1 (sum={probs.sum()!r})")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def prob_of(self, cell: int) -> float:
        try:
            return float(self.probs[self.support.index(int(cell))])
        except ValueError:
            return 0.0

    def expected_distance(self, grid_map: GridMap) -> float:
        """Expected displacement sum_x' f(x'|x) d(x, x')."""
        d = grid_map.distance_matrix[int(self.true_cell), np.asarray(self.support)]
        return float(self.probs @ d)


MechanismBuilder = Callable[..., PerturbationDistribution]


# ============================================================================
# MECHANISMS
# ============================================================================

def _check_pls(true_cell: int, pls: ProtectionLocationSet) -> np.ndarray:
    if len(pls.cells) < 2:
        raise DegeneratePLS(f"PLS of {len(pls.cells)} cell(s) cannot carry a release distribution")
    if int(true_cell) not in pls.cells:
        raise ValueError(f"true cell {true_cell} is not in the PLS")
    return np.asarray(pls.cells, dtype=np.int64)


def _permute_and_flip_law(accept: np.ndarray) -> np.ndarray:
    """
    Exact output law of permute-and-flip given acceptance probabilities.

    P(i) = accept_i * integral_0^1 prod_{j != i} (1 - accept_j s) ds.
    The integrand is a polynomial of degree n - 1, so Gauss-Legendre with
    ceil(n/2) + 1 nodes is exact.
    """
    n = accept.size
    nodes, weights = np.polynomial.legendre.leggauss(n // 2 + 2)
    s = (nodes + 1.0) / 2.0
    w = weights / 2.0
    # log(1 - a_j s_k), shape (n, nodes); s < 1 so every term is finite
    logs = np.log1p(-np.outer(accept, s))
    others = logs.sum(axis=0)[None, :] - logs
    law = accept * (np.exp(others) @ w)
    return law / law.sum()


def pf_distribution(
    true_cell: int,
    pls: ProtectionLocationSet,
    epsilon: float,
    grid_map: GridMap,
    closed_form: bool = False,
) -> PerturbationDistribution:
    """
    Permute-and-flip release distribution over the PLS.

    Each candidate x' is accepted with probability
    exp(eps * (u(x') - u*) / (2 D)), where u(x') = d_sm - d(x, x') and
    u* = d_sm is attained at the true cell. Candidates are visited in a
    uniformly random order until one is accepted.

    Args:
        true_cell: Protected cell (must belong to the PLS).
        pls: Protection location set supplying the support and D.
        epsilon: Budget (>= 0).
        grid_map: Map supplying distances.
        closed_form: Return the normalized weights
            exp(-eps (d - d_sm) / 2D) instead of the permute-and-flip law.

    Raises:
        DegeneratePLS: if the PLS has fewer than two cells.
    """
    cells = _check_pls(true_cell, pls)
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    d = grid_map.distance_matrix[int(true_cell), cells]
    scale = 2.0 * pls.diameter_m
    d_sm = float(d[cells != int(true_cell)].min())

    if closed_form:
        probs = softmax(-epsilon * (d - d_sm) / scale)
    else:
        utility = d_sm - d
        probs = _permute_and_flip_law(np.exp(epsilon * (utility - utility.max()) / scale))
    return PerturbationDistribution(
        true_cell=int(true_cell),
        support=tuple(int(c) for c in cells),
        probs=probs,
        mechanism_tag=MechanismTag.PF,
        epsilon=float(epsilon),
    )


def exp_mechanism_distribution(
    true_cell: int,
    pls: ProtectionLocationSet,
    epsilon: float,
    grid_map: GridMap,
) -> PerturbationDistribution:
    """Exponential mechanism: probs proportional to exp(-eps d(x, x') / 2D) over the PLS."""
    cells = _check_pls(true_cell, pls)
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    d = grid_map.distance_matrix[int(true_cell), cells]
    return PerturbationDistribution(
        true_cell=int(true_cell),
        support=tuple(int(c) for c in cells),
        probs=softmax(-epsilon * d / (2.0 * pls.diameter_m)),
        mechanism_tag=MechanismTag.EXP,
        epsilon=float(epsilon),
    )


def uniform_dls_distribution(true_cell: int, dset: DeltaLocationSet) -> PerturbationDistribution:
    """Uniform over the delta-location set."""
    if int(true_cell) not in dset:
        raise ValueError(f"true cell {true_cell} is not in the delta-location set")
    n = len(dset)
    return PerturbationDistribution(
        true_cell=int(true_cell),
        support=tuple(dset.cells),
        probs=np.full(n, 1.0 / n),
        mechanism_tag=MechanismTag.UNIFORM,
    )


def identity_distribution(
    true_cell: int,
    pls: Optional[ProtectionLocationSet] = None,
    epsilon: float = 0.0,
    grid_map: Optional[GridMap] = None,
) -> PerturbationDistribution:
    """Point mass at the true cell. Accepts (and ignores) the PLS-builder arguments."""
    return PerturbationDistribution(
        true_cell=int(true_cell),
        support=(int(true_cell),),
        probs=np.ones(1),
        mechanism_tag=MechanismTag.IDENTITY,
    )


def builder_for(tag: MechanismTag) -> MechanismBuilder:
    """PLS-based constructor for a mechanism tag."""
    builders: dict[MechanismTag, MechanismBuilder] = {
        MechanismTag.PF: pf_distribution,
        MechanismTag.EXP: exp_mechanism_distribution,
        MechanismTag.IDENTITY: identity_distribution,
    }
    try:
        return builders[MechanismTag(tag)]
    except KeyError:
        raise ValueError(f"mechanism {tag!r} has no PLS-based constructor") from None


def sample(dist: PerturbationDistribution, rng: np.random.Generator) -> CellId:
    """Draw one support cell. Deterministic given the generator state."""
    return CellId(int(dist.support[rng.choice(len(dist.support), p=dist.probs)]))


# ============================================================================
# RELEASE CHANNEL
# ============================================================================

@dataclass(frozen=True, eq=False)
class ReleaseChannel:
    """
    f(x'|x) for every map cell x.

    `assignment[x]` indexes `distributions` (-1 when x has none). Columns of
    the compact matrix are the cells some distribution can release.
    """
    n_cells: int
    assignment: np.ndarray
    distributions: tuple[PerturbationDistribution, ...]

    def __post_init__(self) -> None:
        assignment = np.asarray(self.assignment, dtype=np.int64)
        if assignment.shape != (self.n_cells,):
            raise ValueError(f"assignment must have {self.n_cells} entries, got {assignment.shape}")
        if assignment.max(initial=-1) >= len(self.distributions) or assignment.min(initial=0) < -1:
            raise ValueError("assignment refers to a missing distribution")
        assignment.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, PerturbationDistribution], n_cells: int) -> "ReleaseChannel":
        """One distribution per listed cell; unlisted cells have none."""
        assignment = np.full(n_cells, -1, dtype=np.int64)
        dists: list[PerturbationDistribution] = []
        for cell in sorted(mapping):
            assignment[int(cell)] = len(dists)
            dists.append(mapping[cell])
        return cls(n_cells=n_cells, assignment=assignment, distributions=tuple(dists))

    @classmethod
    def shared(cls, dist: PerturbationDistribution, cells: Sequence[int], n_cells: int) -> "ReleaseChannel":
        """The same distribution for every listed cell."""
        assignment = np.full(n_cells, -1, dtype=np.int64)
        assignment[np.asarray(cells, dtype=np.int64)] = 0
        return cls(n_cells=n_cells, assignment=assignment, distributions=(dist,))

    @cached_property
    def released_cells(self) -> np.ndarray:
        """Sorted union of all supports."""
        cells = sorted({c for dist in self.distributions for c in dist.support})
        return np.asarray(cells, dtype=np.int64)

    @cached_property
    def _column_of(self) -> dict[int, int]:
        return {int(c): k for k, c in enumerate(self.released_cells)}

    @cached_property
    def distribution_matrix(self) -> np.ndarray:
        """(n_distributions, n_released) release probabilities."""
        g = np.zeros((len(self.distributions), self.released_cells.size))
        for k, dist in enumerate(self.distributions):
            cols = [self._column_of[c] for c in dist.support]
            g[k, cols] = dist.probs
        return g

    def compact_matrix(self) -> np.ndarray:
        """(n_cells, n_released) f(x'|x); rows of cells without a distribution are zero."""
        g = np.vstack([self.distribution_matrix, np.zeros((1, self.released_cells.size))])
        return g[self.assignment]  # -1 picks the zero row

    def matrix(self) -> np.ndarray:
        """Dense (n_cells, n_cells) f(x'|x)."""
        dense = np.zeros((self.n_cells, self.n_cells))
        dense[:, self.released_cells] = self.compact_matrix()
        return dense

    def likelihood(self, released: int) -> np.ndarray:
        """f(released | x) for every cell x."""
        col = self._column_of.get(int(released))
        if col is None:
            return np.zeros(self.n_cells)
        column = np.append(self.distribution_matrix[:, col], 0.0)
        return column[self.assignment]

    def has_distribution(self, cell: int) -> bool:
        return bool(self.assignment[int(cell)] >= 0)

    def distribution_for(self, cell: int) -> PerturbationDistribution:
        """
        Raises:
            MissingMechanism: if the cell has no distribution.
        """
        k = int(self.assignment[int(cell)])
        if k < 0:
            raise MissingMechanism(f"no release distribution for cell {cell}")
        return self.distributions[k]

    def require_cover(self, prior: np.ndarray) -> None:
        """
        Raises:
            MissingMechanism: if a prior-supported cell has no distribution.
        """
        uncovered = np.flatnonzero((np.asarray(prior) > 0) & (self.assignment < 0))
        if uncovered.size:
            raise MissingMechanism(f"{uncovered.size} prior-supported cell(s) lack a distribution, first {int(uncovered[0])}")


# ============================================================================
# PRIVACY CHECK
# ============================================================================

def verify_dp_ratio(
    build: MechanismBuilder,
    pls: ProtectionLocationSet,
    epsilon: float,
    grid_map: GridMap,
) -> float:
    """
    Largest f(x'|x) / f(x'|y) over x, y in the PLS and released x'.

    Returns math.inf when some x' is reachable from one cell but not another
    (the mechanism is not differentially private).
    """
    if len(pls.cells) < 2:
        raise DegeneratePLS("ratio check needs at least two cells")
    channel = ReleaseChannel.from_mapping(
        {cell: build(cell, pls, epsilon, grid_map) for cell in pls.cells},
        grid_map.n_cells,
    )
    rows = channel.distribution_matrix
    hi = rows.max(axis=0)
    lo = rows.min(axis=0)
    reachable = hi > 0
    if np.any(lo[reachable] <= 0):
        return math.inf
    return float((hi[reachable] / lo[reachable]).max())


def satisfies_dp(max_ratio: float, epsilon: float, factor: float = 2.0) -> bool:
    """Whether max_ratio <= e^(factor * eps) up to the ratio tolerance."""
    return max_ratio <= math.exp(factor * epsilon) * (1.0 + DP_RATIO_TOLERANCE)
