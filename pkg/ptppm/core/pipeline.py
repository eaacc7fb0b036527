"""
Per-timestep release over a whole trajectory.

Each step:
    1. prior p-_t = p+_{t-1} . M
    2. delta-location set from (p-_t, delta)
    3. protected cell = true cell, or its nearest set cell
    4. per-anchor budget lookup
    5. PLS search with E_m relaxation (PF / EXP only)
    6. release from the protected cell's distribution
    7. posterior p+_t from the release channel

The channel covers every map cell: set cells get their own PLS-based
distribution and every other cell uses its surrogate's, so the posterior
update matches what the user would have done from any true cell.
"""
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..constants import (
    DEFAULT_DELTA,
    DEFAULT_E_M,
    DEFAULT_E_M_DECAY,
    DEFAULT_E_M_MAX_ADJUSTMENTS,
    DEFAULT_EPSILON,
    RELEASE_COST_FACTOR,
    InfeasiblePolicy,
    MechanismTag,
)
from ..logger import get_logger
from .budget import BudgetAllocation
from .errors import EmptyInput, Infeasible, PrivacyEngineError
from .grid_map import CellId, GridMap
from .mechanisms import (
    PerturbationDistribution,
    ReleaseChannel,
    builder_for,
    identity_distribution,
    sample,
    uniform_dls_distribution,
)
from .mobility import (
    DeltaLocationSet,
    ProbVector,
    Trajectory,
    TransitionMatrix,
    delta_location_set,
    posterior,
    propagate_prior,
    surrogate_location,
)
from .pls import PLSSearcher, ProtectionLocationSet, make_pls, search_pls_adaptive

logger = get_logger(__name__)


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass(frozen=True)
class PipelineConfig:
    """Everything a release step needs besides the state and the generator."""
    grid_map: GridMap
    transition: TransitionMatrix
    budgets: BudgetAllocation = field(default_factory=lambda: BudgetAllocation.constant(DEFAULT_EPSILON))
    epsilon_default: float = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA
    e_m: float = DEFAULT_E_M
    e_m_decay: float = DEFAULT_E_M_DECAY
    e_m_max_adjustments: int = DEFAULT_E_M_MAX_ADJUSTMENTS
    mechanism: MechanismTag = MechanismTag.PF
    on_infeasible: InfeasiblePolicy = InfeasiblePolicy.RAISE
    initial_posterior: Optional[ProbVector] = None  # uniform over the map when None
    attacker_transition: Optional[TransitionMatrix] = None  # the user's matrix when None

    def __post_init__(self) -> None:
        if self.transition.n_states != self.grid_map.n_cells:
            raise ValueError(f"{self.transition.n_states}-state matrix on a {self.grid_map.n_cells}-cell map")
        object.__setattr__(self, "mechanism", MechanismTag(self.mechanism))
        object.__setattr__(self, "on_infeasible", InfeasiblePolicy(self.on_infeasible))

    @property
    def start_posterior(self) -> ProbVector:
        if self.initial_posterior is None:
            return ProbVector.uniform(self.grid_map.n_cells)
        return self.initial_posterior

    @property
    def attacker_matrix(self) -> TransitionMatrix:
        return self.transition if self.attacker_transition is None else self.attacker_transition

    def epsilon_for(self, cell: int) -> float:
        return self.budgets.budget_for(cell, self.epsilon_default)


@dataclass
class PipelineState:
    posterior: ProbVector
    t: int = 0


@dataclass(frozen=True)
class ChannelBuild:
    """Release channel of one step plus the per-anchor PLS details."""
    dset: DeltaLocationSet
    channel: ReleaseChannel
    pls: dict[int, ProtectionLocationSet]
    e_m_used: dict[int, float]
    adjustments: dict[int, int]
    fallbacks: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class ReleaseRecord:
    """Outcome of one step. `released` is None for a skipped infeasible step."""
    t: int
    true_cell: int
    protected_cell: int
    dset_size: int
    dset_cells: tuple[int, ...]
    pls: Optional[ProtectionLocationSet]
    released: Optional[int]
    epsilon_used: float
    e_m_used: Optional[float]
    e_m_adjustments: int
    mechanism: MechanismTag
    prior: ProbVector = field(repr=False)
    posterior: ProbVector = field(repr=False)
    channel: Optional[ReleaseChannel] = field(default=None, repr=False)

    @property
    def skipped(self) -> bool:
        return self.released is None

    @property
    def privacy_cost(self) -> float:
        """Budget consumed by this release (2 eps inside a PLS)."""
        return RELEASE_COST_FACTOR * self.epsilon_used


@dataclass(frozen=True)
class PrivacyAccounting:
    per_step_cost: tuple[float, ...]
    total_cost: float
    max_epsilon: float
    released_steps: int


# ============================================================================
# CHANNEL CONSTRUCTION
# ============================================================================

def surrogate_assignment(dset: DeltaLocationSet, grid_map: GridMap) -> np.ndarray:
    """For every map cell, its nearest set cell (itself when in the set)."""
    idx = dset.indices
    return idx[np.argmin(grid_map.distance_matrix[:, idx], axis=1)]


def _channel_from_anchors(
    dists: dict[int, PerturbationDistribution],
    dset: DeltaLocationSet,
    grid_map: GridMap,
) -> ReleaseChannel:
    order = {cell: k for k, cell in enumerate(sorted(dists))}
    nearest = surrogate_assignment(dset, grid_map)
    assignment = np.fromiter((order[int(c)] for c in nearest), dtype=np.int64, count=grid_map.n_cells)
    return ReleaseChannel(
        n_cells=grid_map.n_cells,
        assignment=assignment,
        distributions=tuple(dists[cell] for cell in sorted(dists)),
    )


def build_channel(
    prior: ProbVector,
    cfg: PipelineConfig,
    protected_cell: Optional[int] = None,
    dset: Optional[DeltaLocationSet] = None,
) -> ChannelBuild:
    """
    Release channel for one step.

    Anchors other than `protected_cell` whose PLS stays infeasible after all
    E_m relaxations fall back to the whole delta-location set.

    Raises:
        Infeasible: if the protected cell has no PLS.
    """
    if dset is None:
        dset = delta_location_set(prior, cfg.delta)
    mechanism = cfg.mechanism
    grid_map = cfg.grid_map

    if mechanism is MechanismTag.UNIFORM:
        dists = {cell: uniform_dls_distribution(cell, dset) for cell in dset.cells}
        return ChannelBuild(dset, _channel_from_anchors(dists, dset, grid_map), {}, {}, {})
    if mechanism is MechanismTag.IDENTITY:
        dists = {cell: identity_distribution(cell) for cell in dset.cells}
        return ChannelBuild(dset, _channel_from_anchors(dists, dset, grid_map), {}, {}, {})

    build = builder_for(mechanism)
    searcher = PLSSearcher(dset, prior, grid_map)
    dists: dict[int, PerturbationDistribution] = {}
    plss: dict[int, ProtectionLocationSet] = {}
    e_m_used: dict[int, float] = {}
    adjustments: dict[int, int] = {}
    fallbacks: list[int] = []
    for anchor in dset.cells:
        epsilon = cfg.epsilon_for(anchor)
        try:
            pls, e_m, k = search_pls_adaptive(
                searcher, anchor, epsilon, cfg.e_m, cfg.e_m_decay, cfg.e_m_max_adjustments,
            )
        except Infeasible:
            if anchor == protected_cell or len(dset) < 2:
                raise
            pls = make_pls(dset.cells, anchor, prior, grid_map)
            e_m, k = None, cfg.e_m_max_adjustments
            fallbacks.append(anchor)
            logger.warning("pls_fallback", anchor=anchor, dset_size=len(dset), epsilon=epsilon)
        dists[anchor] = build(anchor, pls, epsilon, grid_map)
        plss[anchor] = pls
        e_m_used[anchor] = e_m
        adjustments[anchor] = k
    return ChannelBuild(
        dset=dset,
        channel=_channel_from_anchors(dists, dset, grid_map),
        pls=plss,
        e_m_used=e_m_used,
        adjustments=adjustments,
        fallbacks=tuple(fallbacks),
    )


# ============================================================================
# RELEASE
# ============================================================================

def release_step(
    state: PipelineState,
    true_cell: int,
    cfg: PipelineConfig,
    rng: np.random.Generator,
) -> tuple[ReleaseRecord, ProbVector]:
    """
    One release.

    Raises:
        Infeasible: (with the timestep) if the protected cell has no PLS
            after every E_m relaxation and the policy is RAISE.
    """
    cfg.grid_map.check_cell(true_cell)
    prior = propagate_prior(state.posterior, cfg.transition)
    dset = delta_location_set(prior, cfg.delta)
    protected = surrogate_location(true_cell, dset, cfg.grid_map)
    epsilon = 0.0 if cfg.mechanism is MechanismTag.UNIFORM else cfg.epsilon_for(protected)

    try:
        built = build_channel(prior, cfg, protected_cell=protected, dset=dset)
    except Infeasible as e:
        if cfg.on_infeasible is InfeasiblePolicy.RAISE:
            raise e.at(state.t)
        logger.warning("step_skipped", t=state.t, protected_cell=protected, dset_size=len(dset), detail=str(e))
        record = ReleaseRecord(
            t=state.t, true_cell=int(true_cell), protected_cell=int(protected),
            dset_size=len(dset), dset_cells=dset.cells, pls=None, released=None,
            epsilon_used=0.0, e_m_used=None, e_m_adjustments=cfg.e_m_max_adjustments,
            mechanism=cfg.mechanism, prior=prior, posterior=prior, channel=None,
        )
        return record, prior

    released = sample(built.channel.distribution_for(protected), rng)
    post = posterior(prior, released, built.channel)
    record = ReleaseRecord(
        t=state.t,
        true_cell=int(true_cell),
        protected_cell=int(protected),
        dset_size=len(dset),
        dset_cells=dset.cells,
        pls=built.pls.get(protected),
        released=int(released),
        epsilon_used=epsilon,
        e_m_used=built.e_m_used.get(protected),
        e_m_adjustments=built.adjustments.get(protected, 0),
        mechanism=cfg.mechanism,
        prior=prior,
        posterior=post,
        channel=built.channel,
    )
    logger.debug(
        "step_released",
        t=state.t,
        dset_size=len(dset),
        protected_cell=int(protected),
        released=int(released),
        epsilon=epsilon,
        pls_size=0 if record.pls is None else len(record.pls),
    )
    return record, post


def run_pipeline(
    trajectory: Trajectory,
    cfg: PipelineConfig,
    mechanism_tag: Optional[MechanismTag] = None,
    rng_seed: int | np.random.SeedSequence = 0,
) -> list[ReleaseRecord]:
    """
    Release every step of a trajectory, chaining posteriors.

    Deterministic given the seed. `mechanism_tag` overrides cfg.mechanism.

    Raises:
        EmptyInput: for an empty trajectory.
        Infeasible: with the timestep, under the RAISE policy.
    """
    if not len(trajectory):
        raise EmptyInput("trajectory has no steps")
    if mechanism_tag is not None:
        cfg = replace(cfg, mechanism=MechanismTag(mechanism_tag))
    rng = np.random.default_rng(rng_seed)

    state = PipelineState(posterior=cfg.start_posterior)
    records: list[ReleaseRecord] = []
    for t, cell in trajectory.steps:
        state.t = t
        try:
            record, state.posterior = release_step(state, cell, cfg, rng)
        except PrivacyEngineError as e:
            raise e.at(t)
        records.append(record)

    logger.info(
        "pipeline_finished",
        user_id=trajectory.user_id,
        steps=len(records),
        skipped=sum(r.skipped for r in records),
        mechanism=cfg.mechanism.value,
        total_cost=privacy_accounting(records).total_cost,
    )
    return records


# ============================================================================
# REPLAY / ACCOUNTING
# ============================================================================

def replay_posteriors(released: Sequence[Optional[int]], cfg: PipelineConfig) -> list[ProbVector]:
    """
    Re-derive the posterior chain from the released cells alone.

    Channels are rebuilt from each step's prior (they depend on nothing
    random), so stored posteriors can be audited after the fact.
    """
    post = cfg.start_posterior
    chain: list[ProbVector] = []
    for cell in released:
        prior = propagate_prior(post, cfg.transition)
        if cell is None:
            post = prior
        else:
            post = posterior(prior, cell, build_channel(prior, cfg).channel)
        chain.append(post)
    return chain


def privacy_accounting(records: Sequence[ReleaseRecord]) -> PrivacyAccounting:
    """Per-step 2 eps costs, their total and the largest per-step eps."""
    costs = tuple(r.privacy_cost for r in records)
    return PrivacyAccounting(
        per_step_cost=costs,
        total_cost=float(sum(costs)),
        max_epsilon=max((r.epsilon_used for r in records), default=0.0),
        released_steps=sum(not r.skipped for r in records),
    )


def released_cells(records: Sequence[ReleaseRecord]) -> list[Optional[CellId]]:
    return [None if r.released is None else CellId(r.released) for r in records]
