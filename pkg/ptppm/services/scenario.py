"""
Scenario assembly: turns a ScenarioConfig into the map, road graph,
mobility history, transition matrix and budgets the pipeline runs on.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..config import Settings, get_settings
from ..constants import MechanismTag
from ..core.budget import BudgetAllocation, run_ppba, sensitive_from_classes
from ..core.errors import ConfigError, DimensionMismatch, EmptyInput, UnknownVertex
from ..core.grid_map import GridMap
from ..core.mobility import Trajectory, TransitionMatrix, build_transition_matrix
from ..core.pipeline import PipelineConfig
from ..core.road_graph import RoadGraph, grid_graph
from ..logger import get_logger
from ..models import ScenarioConfig
from .storage import read_graph, read_model, read_trajectory_csv
from .synthetic import random_walk_trajectories

logger = get_logger(__name__)


@dataclass(frozen=True)
class Scenario:
    """A resolved scenario. Picklable, so sweep workers receive it whole."""
    config: ScenarioConfig
    settings: Settings
    grid_map: GridMap
    graph: RoadGraph
    trajectories: tuple[Trajectory, ...]
    transition: TransitionMatrix
    sensitive: tuple[int, ...]


# ============================================================================
# LOADING
# ============================================================================

def build_scenario(
    config: ScenarioConfig,
    base_dir: Path = Path("."),
    settings: Optional[Settings] = None,
) -> Scenario:
    """
    Resolve a scenario config. Relative file paths are taken from base_dir.

    Raises:
        ConfigError: on missing files or a history that does not fit the map.
    """
    settings = settings or get_settings()
    grid_map = config.map.to_grid_map(settings)
    graph = read_graph(base_dir / config.graph, grid_map) if config.graph else grid_graph(grid_map)

    trajectories = [read_trajectory_csv(base_dir / p) for p in config.trajectories]
    if config.synthetic is not None:
        syn = config.synthetic
        trajectories += random_walk_trajectories(
            grid_map, graph, syn.n_trajectories, syn.length, syn.persistence, np.random.default_rng(syn.seed),
        )
    try:
        transition = build_transition_matrix(trajectories, grid_map, smoothing=config.smoothing)
    except (EmptyInput, DimensionMismatch) as e:
        raise ConfigError(f"scenario {config.name!r}: {e}") from None

    sensitive = set(config.sensitive)
    if config.sensitive_class_threshold is not None:
        sensitive.update(sensitive_from_classes(config.semantic_classes, config.sensitive_class_threshold))
    missing = sorted(c for c in sensitive if c not in graph.vertices)
    if missing:
        raise ConfigError(f"scenario {config.name!r}: sensitive cells {missing} are not graph vertices")

    logger.info(
        "scenario_loaded",
        scenario=config.name,
        cells=grid_map.n_cells,
        edges=len(graph),
        trajectories=len(trajectories),
        sensitive=len(sensitive),
    )
    return Scenario(
        config=config,
        settings=settings,
        grid_map=grid_map,
        graph=graph,
        trajectories=tuple(trajectories),
        transition=transition,
        sensitive=tuple(sorted(sensitive)),
    )


def load_scenario(path: Path, settings: Optional[Settings] = None) -> Scenario:
    path = Path(path)
    return build_scenario(read_model(path, ScenarioConfig), base_dir=path.parent, settings=settings)


# ============================================================================
# DERIVED CONFIGURATION
# ============================================================================

def allocate_budgets(scenario: Scenario, epsilon_s: Optional[float] = None) -> Optional[BudgetAllocation]:
    """PPBA over the scenario's history; None when no cell is sensitive."""
    if not scenario.sensitive:
        return None
    config, settings = scenario.config, scenario.settings
    try:
        return run_ppba(
            list(scenario.trajectories),
            scenario.graph,
            list(scenario.sensitive),
            epsilon_s if epsilon_s is not None else (config.epsilon_s or settings.epsilon_s),
            config.weights(settings),
            None,
            scenario.grid_map,
            semantic_classes=config.semantic_classes,
            neighbor_mode=config.neighbor_mode or settings.neighbor_mode,
            cap_adjacent_at_sensitive=(
                settings.cap_adjacent_at_sensitive
                if config.cap_adjacent_at_sensitive is None
                else config.cap_adjacent_at_sensitive
            ),
        )
    except UnknownVertex as e:
        raise ConfigError(str(e)) from None


def pipeline_config(
    scenario: Scenario,
    epsilon_s: Optional[float] = None,
    e_m: Optional[float] = None,
    delta: Optional[float] = None,
    mechanism: Optional[MechanismTag] = None,
) -> PipelineConfig:
    """
    Pipeline configuration for one parameter point.

    Without correlation awareness the user propagates uniformly while the
    attacker keeps the true mobility model. A positive
    `attacker_perturbation` hands the attacker a noisy copy of it instead.
    """
    config, settings = scenario.config, scenario.settings
    epsilon_s = epsilon_s if epsilon_s is not None else (config.epsilon_s or settings.epsilon_s)
    if config.epsilon_default_follows_epsilon_s:
        epsilon_default = epsilon_s
    else:
        epsilon_default = config.epsilon_default or settings.epsilon_default

    budgets = allocate_budgets(scenario, epsilon_s) or BudgetAllocation.constant(epsilon_default)

    true_m = scenario.transition
    attacker_m: Optional[TransitionMatrix] = None
    if config.attacker_perturbation > 0:
        attacker_m = true_m.perturbed(config.attacker_perturbation, np.random.default_rng(config.attacker_seed))
    user_m = true_m
    if not config.correlation_aware:
        user_m = TransitionMatrix.uniform(true_m.n_states)
        if attacker_m is None:
            attacker_m = true_m

    return PipelineConfig(
        grid_map=scenario.grid_map,
        transition=user_m,
        budgets=budgets,
        epsilon_default=epsilon_default,
        delta=delta if delta is not None else (config.delta or settings.delta),
        e_m=e_m if e_m is not None else (config.e_m or settings.e_m),
        e_m_decay=settings.e_m_decay,
        e_m_max_adjustments=settings.e_m_max_adjustments,
        mechanism=MechanismTag(mechanism or config.mechanism),
        on_infeasible=config.on_infeasible,
        attacker_transition=attacker_m,
    )
