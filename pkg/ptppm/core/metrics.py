"""
Evaluation quantities.

- privacy p = sum Pr(x) f(x'|x) d(x, guess(x'))   (exact)
- QoS loss q = sum Pr(x) f(x'|x) d(x, x')          (exact)
- attack success = sum Pr(x) f(x'|x) [guess(x') = x]

`guess` is the attacker's deterministic strategy (optimal or Bayesian)
computed from the attacker's own prior, which defaults to Pr.
Monte Carlo estimators exist only to cross-check the exact sums.
"""
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..constants import AttackMode, MechanismTag
from ..logger import get_logger
from .adversary import attack_trajectory
from .budget import BudgetAllocation
from .grid_map import GridMap
from .mechanisms import ReleaseChannel
from .mobility import ProbVector, delta_location_set, propagate_prior
from .pipeline import PipelineConfig, ReleaseRecord, build_channel

logger = get_logger(__name__)


# ============================================================================
# EXACT METRICS
# ============================================================================

def _joint(prior: ProbVector, channel: ReleaseChannel) -> np.ndarray:
    """Pr(x) f(x'|x) as (n_cells, n_released)."""
    channel.require_cover(prior.p)
    return prior.p[:, None] * channel.compact_matrix()


def _guesses(
    attacker_joint: np.ndarray,
    released: np.ndarray,
    mode: AttackMode,
    grid_map: GridMap,
) -> np.ndarray:
    """Attacker's guess for each released column (first index wins ties)."""
    if AttackMode(mode) is AttackMode.OPTIMAL:
        return np.argmin(grid_map.distance_matrix @ attacker_joint, axis=0)
    return np.argmax(attacker_joint, axis=0)


def _attack_tables(
    prior: ProbVector,
    channel: ReleaseChannel,
    mode: AttackMode,
    grid_map: GridMap,
    attacker_prior: Optional[ProbVector],
) -> tuple[np.ndarray, np.ndarray]:
    joint = _joint(prior, channel)
    attacker_joint = joint if attacker_prior is None else attacker_prior.p[:, None] * channel.compact_matrix()
    return joint, _guesses(attacker_joint, channel.released_cells, mode, grid_map)


def privacy_metric(
    prior: ProbVector,
    channel: ReleaseChannel,
    attack_mode: AttackMode,
    grid_map: GridMap,
    attacker_prior: Optional[ProbVector] = None,
) -> float:
    """
    Expected distance between the true cell and the attacker's guess.

    Raises:
        MissingMechanism: if a prior-supported cell has no distribution.
    """
    joint, guesses = _attack_tables(prior, channel, attack_mode, grid_map, attacker_prior)
    # column x' contributes sum_x joint[x, x'] d(x, guess(x'))
    return float(np.einsum("xr,xr->", joint, grid_map.distance_matrix[:, guesses]))


def qos_loss(prior: ProbVector, channel: ReleaseChannel, grid_map: GridMap) -> float:
    """
    Expected distance between the true and the released cell.

    Raises:
        MissingMechanism: if a prior-supported cell has no distribution.
    """
    joint = _joint(prior, channel)
    return float(np.einsum("xr,xr->", joint, grid_map.distance_matrix[:, channel.released_cells]))


def attack_success(
    prior: ProbVector,
    channel: ReleaseChannel,
    attack_mode: AttackMode,
    grid_map: GridMap,
    attacker_prior: Optional[ProbVector] = None,
) -> float:
    """Probability that the attacker's guess is the true cell."""
    joint, guesses = _attack_tables(prior, channel, attack_mode, grid_map, attacker_prior)
    return float(joint[guesses, np.arange(guesses.size)].sum())


def expected_inference_error(prior: ProbVector, channel: ReleaseChannel, released: int, grid_map: GridMap) -> float:
    """Smallest posterior expected distance an attacker can reach after seeing `released`."""
    weights = prior.p * channel.likelihood(released)
    total = weights.sum()
    if total <= 0:
        return math.inf
    return float((grid_map.distance_matrix @ weights).min() / total)


# ============================================================================
# MONTE CARLO CROSS-CHECKS
# ============================================================================

def _sample_pairs(
    prior: ProbVector,
    channel: ReleaseChannel,
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """(true cell, released column) pairs, drawn cell by cell in ascending order."""
    compact = channel.compact_matrix()
    counts = rng.multinomial(n_samples, prior.p)
    truths: list[np.ndarray] = []
    columns: list[np.ndarray] = []
    for cell in np.flatnonzero(counts):
        truths.append(np.full(counts[cell], cell))
        columns.append(rng.choice(compact.shape[1], size=counts[cell], p=compact[cell]))
    return np.concatenate(truths), np.concatenate(columns)


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se


def monte_carlo_privacy(
    prior: ProbVector,
    channel: ReleaseChannel,
    attack_mode: AttackMode,
    grid_map: GridMap,
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Sampled privacy: (mean, standard error)."""
    channel.require_cover(prior.p)
    _, guesses = _attack_tables(prior, channel, attack_mode, grid_map, None)
    truths, columns = _sample_pairs(prior, channel, n_samples, rng)
    return _mean_and_se(grid_map.distance_matrix[truths, guesses[columns]])


def monte_carlo_qos(
    prior: ProbVector,
    channel: ReleaseChannel,
    grid_map: GridMap,
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Sampled QoS loss: (mean, standard error)."""
    channel.require_cover(prior.p)
    truths, columns = _sample_pairs(prior, channel, n_samples, rng)
    return _mean_and_se(grid_map.distance_matrix[truths, channel.released_cells[columns]])


# ============================================================================
# TRENDS AND COMPARISONS
# ============================================================================

def dset_size_curve(prior: ProbVector, deltas: Sequence[float]) -> list[int]:
    """Size of the delta-location set for each delta."""
    return [len(delta_location_set(prior, delta)) for delta in deltas]


@dataclass(frozen=True)
class LocationComparison:
    cell: int
    aware_error_m: float
    baseline_error_m: float
    aware_success: float
    baseline_success: float


@dataclass(frozen=True)
class ComparisonSummary:
    rows: tuple[LocationComparison, ...]
    error_better_fraction: float
    success_better_fraction: float


def _per_location(
    prior: ProbVector,
    channel: ReleaseChannel,
    grid_map: GridMap,
) -> tuple[np.ndarray, np.ndarray]:
    """Per true cell: expected optimal-attack error and Bayesian success probability."""
    compact = channel.compact_matrix()
    attacker_joint = prior.p[:, None] * compact
    optimal = _guesses(attacker_joint, channel.released_cells, AttackMode.OPTIMAL, grid_map)
    bayes = _guesses(attacker_joint, channel.released_cells, AttackMode.BAYESIAN, grid_map)
    error = np.einsum("xr,xr->x", compact, grid_map.distance_matrix[:, optimal])
    success = (compact * (bayes[None, :] == np.arange(grid_map.n_cells)[:, None])).sum(axis=1)
    return error, success


def compare_per_location(
    prior: ProbVector,
    baseline_prior: ProbVector,
    cfg: PipelineConfig,
) -> ComparisonSummary:
    """
    Correlation-aware release vs a release built on `baseline_prior`.

    Both channels are attacked by an adversary holding the true `prior`.
    Rows cover every cell of the correlation-aware delta-location set.
    """
    aware = build_channel(prior, cfg).channel
    baseline = build_channel(baseline_prior, cfg).channel
    aware_error, aware_success = _per_location(prior, aware, cfg.grid_map)
    base_error, base_success = _per_location(prior, baseline, cfg.grid_map)

    cells = delta_location_set(prior, cfg.delta).cells
    rows = tuple(
        LocationComparison(
            cell=c,
            aware_error_m=float(aware_error[c]),
            baseline_error_m=float(base_error[c]),
            aware_success=float(aware_success[c]),
            baseline_success=float(base_success[c]),
        )
        for c in cells
    )
    return ComparisonSummary(
        rows=rows,
        error_better_fraction=sum(r.aware_error_m > r.baseline_error_m for r in rows) / len(rows),
        success_better_fraction=sum(r.aware_success < r.baseline_success for r in rows) / len(rows),
    )


def calibrate_epsilon(
    target: float,
    objective: Callable[[float], float],
    lo: float = 1e-3,
    hi: float = 8.0,
    tol: float = 1e-4,
    max_iter: int = 100,
) -> float:
    """
    Bisection for eps with objective(eps) = target.

    The objective must change sign around the target between lo and hi.
    """
    f_lo = objective(lo) - target
    f_hi = objective(hi) - target
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if f_lo * f_hi > 0:
        raise ValueError(f"target {target} is not bracketed by eps in [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = (lo + hi) / 2.0
        f_mid = objective(mid) - target
        if f_mid == 0 or hi - lo < tol:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return (lo + hi) / 2.0


@dataclass(frozen=True)
class FrontierPoint:
    epsilon: float
    privacy: float
    qos_loss: float


def privacy_qos_frontier(
    prior: ProbVector,
    epsilons: Sequence[float],
    cfg: PipelineConfig,
    attack_mode: AttackMode = AttackMode.OPTIMAL,
    mechanism: Optional[MechanismTag] = None,
) -> list[FrontierPoint]:
    """(p, q) for a uniform per-cell budget along an eps grid."""
    points: list[FrontierPoint] = []
    for epsilon in epsilons:
        point_cfg = replace(
            cfg,
            budgets=BudgetAllocation.constant(epsilon),
            epsilon_default=float(epsilon),
            mechanism=cfg.mechanism if mechanism is None else MechanismTag(mechanism),
        )
        channel = build_channel(prior, point_cfg).channel
        points.append(FrontierPoint(
            epsilon=float(epsilon),
            privacy=privacy_metric(prior, channel, attack_mode, cfg.grid_map),
            qos_loss=qos_loss(prior, channel, cfg.grid_map),
        ))
    return points


# ============================================================================
# RECORD EVALUATION
# ============================================================================

@dataclass(frozen=True)
class StepMetrics:
    t: int
    privacy_optimal: float
    privacy_bayesian: float
    qos_loss: float
    success_optimal: float
    success_bayesian: float
    dset_size: int
    pls_diameter_m: Optional[float]
    attack_error_m: Optional[float]  # realized optimal-attack error on the actual release
    attack_hit: Optional[bool]  # realized Bayesian hit on the actual release


def evaluate_records(records: Sequence[ReleaseRecord], cfg: PipelineConfig) -> list[StepMetrics]:
    """
    Exact per-step metrics against an attacker using cfg.attacker_matrix.

    The attacker's prior at each step comes from its own posterior chain; it
    is also the distribution Pr(x) of the metrics. Skipped steps count as a
    release of nothing: zero QoS loss and the attacker's guess from its prior.
    """
    if not records:
        return []
    grid_map = cfg.grid_map
    m = cfg.attacker_matrix
    initial = propagate_prior(cfg.start_posterior, m)
    released = [r.released for r in records]
    channels = [r.channel for r in records]
    truths = [r.true_cell for r in records]
    times = [r.t for r in records]
    optimal = attack_trajectory(released, channels, initial, m, AttackMode.OPTIMAL, grid_map, truths, times)
    bayes = attack_trajectory(released, channels, initial, m, AttackMode.BAYESIAN, grid_map, truths, times)

    steps: list[StepMetrics] = []
    prior = initial
    for k, record in enumerate(records):
        if k > 0:
            prior = propagate_prior(post_prev, m)
        if record.skipped:
            steps.append(StepMetrics(
                t=record.t,
                privacy_optimal=optimal[k].expected_error_m,
                privacy_bayesian=float(grid_map.distance_matrix[bayes[k].inferred] @ prior.p),
                qos_loss=0.0,
                success_optimal=prior[optimal[k].inferred],
                success_bayesian=prior[bayes[k].inferred],
                dset_size=record.dset_size,
                pls_diameter_m=None,
                attack_error_m=optimal[k].true_error_m,
                attack_hit=bayes[k].hit,
            ))
            post_prev = prior
            continue
        channel = record.channel
        steps.append(StepMetrics(
            t=record.t,
            privacy_optimal=privacy_metric(prior, channel, AttackMode.OPTIMAL, grid_map),
            privacy_bayesian=privacy_metric(prior, channel, AttackMode.BAYESIAN, grid_map),
            qos_loss=qos_loss(prior, channel, grid_map),
            success_optimal=attack_success(prior, channel, AttackMode.OPTIMAL, grid_map),
            success_bayesian=attack_success(prior, channel, AttackMode.BAYESIAN, grid_map),
            dset_size=record.dset_size,
            pls_diameter_m=None if record.pls is None else record.pls.diameter_m,
            attack_error_m=optimal[k].true_error_m,
            attack_hit=bayes[k].hit,
        ))
        post_prev = ProbVector.normalized(prior.p * channel.likelihood(record.released))
    return steps
