"""
Trajectory attacker.

The attacker knows the transition matrix and every release distribution.
At each step it propagates its belief through M, conditions on the released
cell and guesses either the expected-distance minimizer (optimal) or the
maximum-posterior cell (Bayesian). Ties go to the lowest CellId.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..constants import AttackMode
from .errors import DimensionMismatch, PrivacyEngineError
from .grid_map import CellId, GridMap
from .mobility import Likelihood, ProbVector, TransitionMatrix, posterior, propagate_prior


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass
class AttackerState:
    prior: ProbVector
    posterior: ProbVector
    transition: TransitionMatrix
    inferred_so_far: list[CellId] = field(default_factory=list)


@dataclass(frozen=True)
class AttackOutcome:
    """
    One step of an attack.

    success_prob is the attacker's posterior mass on its own guess; `hit`
    records whether the guess equals the true cell when that is known.
    """
    t: int
    released: Optional[int]
    inferred: CellId
    expected_error_m: float
    success_prob: float
    hit: Optional[bool] = None
    true_error_m: Optional[float] = None


# ============================================================================
# INFERENCE
# ============================================================================

def optimal_inference(post: ProbVector, grid_map: GridMap) -> tuple[CellId, float]:
    """Guess minimizing sum_x post[x] d(guess, x) over the whole map."""
    if len(post) != grid_map.n_cells:
        raise DimensionMismatch(f"posterior of size {len(post)} on a {grid_map.n_cells}-cell map")
    scores = grid_map.distance_matrix @ post.p
    guess = int(np.argmin(scores))
    return CellId(guess), float(scores[guess])


def bayesian_inference(post: ProbVector) -> CellId:
    """Maximum-posterior cell."""
    return CellId(int(np.argmax(post.p)))


def infer(post: ProbVector, mode: AttackMode, grid_map: GridMap) -> tuple[CellId, float]:
    """Guess under `mode` with the posterior expected error of that guess."""
    if AttackMode(mode) is AttackMode.OPTIMAL:
        return optimal_inference(post, grid_map)
    guess = bayesian_inference(post)
    return guess, float(grid_map.distance_matrix[guess] @ post.p)


# ============================================================================
# TRAJECTORY ATTACK
# ============================================================================

def attacker_step(
    state: AttackerState,
    t: int,
    released: Optional[int],
    channel: Likelihood,
    mode: AttackMode,
    grid_map: GridMap,
    true_cell: Optional[int] = None,
) -> AttackOutcome:
    """
    Condition the state's prior on one release and guess.

    A `released` of None (nothing was published) leaves the posterior equal
    to the prior. Updates `state` in place.
    """
    state.posterior = state.prior if released is None else posterior(state.prior, released, channel)
    guess, expected_error = infer(state.posterior, mode, grid_map)
    state.inferred_so_far.append(guess)
    return AttackOutcome(
        t=t,
        released=None if released is None else int(released),
        inferred=guess,
        expected_error_m=expected_error,
        success_prob=state.posterior[guess],
        hit=None if true_cell is None else guess == int(true_cell),
        true_error_m=None if true_cell is None else float(grid_map.distance_matrix[guess, int(true_cell)]),
    )


def attack_trajectory(
    released: Sequence[Optional[int]],
    mechanisms: Sequence[Likelihood],
    initial_prior: ProbVector,
    m: TransitionMatrix,
    mode: AttackMode,
    grid_map: GridMap,
    true_cells: Optional[Sequence[int]] = None,
    timesteps: Optional[Sequence[int]] = None,
) -> list[AttackOutcome]:
    """
    Infer a whole trajectory from its releases.

    Args:
        released: Released cell per step (None for a step without release).
        mechanisms: Release channel used at each step.
        initial_prior: Attacker's prior for the first step.
        m: Attacker's transition matrix.
        mode: Optimal or Bayesian guessing.
        grid_map: Map supplying distances.
        true_cells: Optional true cells, to score hits.
        timesteps: Optional step labels (default 0..n-1).

    Raises:
        ZeroEvidence: with the failing step's timestep attached.
    """
    if len(mechanisms) != len(released):
        raise DimensionMismatch(f"{len(released)} releases but {len(mechanisms)} mechanisms")
    if true_cells is not None and len(true_cells) != len(released):
        raise DimensionMismatch(f"{len(released)} releases but {len(true_cells)} true cells")
    labels = list(timesteps) if timesteps is not None else list(range(len(released)))

    state = AttackerState(prior=initial_prior, posterior=initial_prior, transition=m)
    outcomes: list[AttackOutcome] = []
    for k, (cell, channel) in enumerate(zip(released, mechanisms)):
        if k > 0:
            state.prior = propagate_prior(state.posterior, m)
        try:
            outcomes.append(attacker_step(
                state, labels[k], cell, channel, mode, grid_map,
                None if true_cells is None else true_cells[k],
            ))
        except PrivacyEngineError as e:
            raise e.at(labels[k])
    return outcomes
