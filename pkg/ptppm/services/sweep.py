"""
Parameter sweeps over (epsilon_s, E_m, delta) grids.

Every (grid point, seed) pair becomes one result row. A seed spawns one
child SeedSequence per trial; a trial draws its trajectory from the
scenario history and runs the pipeline from an independent grandchild, so
rows depend only on (scenario, point, seed, trials) and never on worker
scheduling.
"""
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..constants import MANIFEST_FILENAME, SWEEP_FILENAME, AttackMode
from ..core.errors import PrivacyEngineError
from ..core.metrics import StepMetrics, evaluate_records
from ..core.mobility import Trajectory
from ..core.pipeline import PipelineConfig, run_pipeline
from ..logger import get_logger
from ..models import Manifest, SweepConfig, SweepRow
from ..utils import make_header
from .scenario import Scenario, pipeline_config
from .storage import write_json, write_sweep_csv

logger = get_logger(__name__)


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass(frozen=True, order=True)
class GridPoint:
    epsilon_s: float
    e_m: float
    delta: float


@dataclass(frozen=True)
class TrialMetrics:
    """Trajectory means of the exact per-step metrics for one trial."""
    privacy: float
    qos_loss: float
    dset_size: float
    pls_diameter_m: float  # nan when no step built a PLS
    attack_success: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    failed: list[dict[str, float]] = field(default_factory=list)


def sweep_grid(epsilon_s: Sequence[float], e_m: Sequence[float], delta: Sequence[float]) -> list[GridPoint]:
    return [GridPoint(float(a), float(b), float(c)) for a, b, c in itertools.product(epsilon_s, e_m, delta)]


# ============================================================================
# TRIALS
# ============================================================================

def trial_plan(scenario: Scenario, seed: int, trials: int) -> list[tuple[Trajectory, np.random.SeedSequence]]:
    """(trajectory, pipeline seed) for each trial of one seed."""
    plan = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        pick, release = child.spawn(2)
        idx = int(np.random.default_rng(pick).integers(len(scenario.trajectories)))
        plan.append((scenario.trajectories[idx], release))
    return plan


def summarize_steps(steps: Sequence[StepMetrics], mode: AttackMode) -> TrialMetrics:
    optimal = AttackMode(mode) is AttackMode.OPTIMAL
    diameters = [s.pls_diameter_m for s in steps if s.pls_diameter_m is not None]
    return TrialMetrics(
        privacy=float(np.mean([s.privacy_optimal if optimal else s.privacy_bayesian for s in steps])),
        qos_loss=float(np.mean([s.qos_loss for s in steps])),
        dset_size=float(np.mean([s.dset_size for s in steps])),
        pls_diameter_m=float(np.mean(diameters)) if diameters else float("nan"),
        attack_success=float(np.mean([s.success_optimal if optimal else s.success_bayesian for s in steps])),
    )


def run_trial(trajectory: Trajectory, cfg: PipelineConfig, seed: np.random.SeedSequence, mode: AttackMode) -> TrialMetrics:
    records = run_pipeline(trajectory, cfg, rng_seed=seed)
    return summarize_steps(evaluate_records(records, cfg), mode)


def evaluate_point(scenario: Scenario, point: GridPoint, seed: int, trials: int) -> SweepRow:
    """One result row: mean and population std over the trials of one seed."""
    cfg = pipeline_config(scenario, epsilon_s=point.epsilon_s, e_m=point.e_m, delta=point.delta)
    mode = scenario.config.attack_mode
    results = [run_trial(traj, cfg, s, mode) for traj, s in trial_plan(scenario, seed, trials)]

    def _column(name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in results])

    diameters = _column("pls_diameter_m")
    return SweepRow(
        scenario=scenario.config.name,
        epsilon_s=point.epsilon_s,
        e_m=point.e_m,
        delta=point.delta,
        seed=seed,
        p_mean=float(_column("privacy").mean()),
        p_std=float(_column("privacy").std()),
        q_mean=float(_column("qos_loss").mean()),
        q_std=float(_column("qos_loss").std()),
        dset_size_mean=float(_column("dset_size").mean()),
        pls_diam_mean=float(np.nanmean(diameters)) if np.isfinite(diameters).any() else float("nan"),
        attack_success_mean=float(_column("attack_success").mean()),
    )


def _evaluate_task(task: tuple[Scenario, GridPoint, int, int]) -> tuple[GridPoint, int, Optional[SweepRow], Optional[str]]:
    scenario, point, seed, trials = task
    try:
        return point, seed, evaluate_point(scenario, point, seed, trials), None
    except (PrivacyEngineError, ValueError) as e:
        return point, seed, None, f"{type(e).__name__}: {e}"


# ============================================================================
# SWEEP
# ============================================================================

def sweep(
    scenario: Scenario,
    grid: Sequence[GridPoint],
    trials: int,
    seeds: Sequence[int],
    max_workers: int = 1,
) -> SweepResult:
    """
    Evaluate every (point, seed) pair, in a process pool when max_workers > 1.

    A failing pair is logged and listed in `failed`; the sweep continues.
    Rows come back sorted by (epsilon_s, e_m, delta, seed).
    """
    if not grid:
        raise ValueError("empty sweep grid")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tasks = [(scenario, point, int(seed), trials) for point in grid for seed in seeds]
    logger.info("sweep_started", scenario=scenario.config.name, tasks=len(tasks), workers=max_workers)

    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(_evaluate_task, tasks))
    else:
        outcomes = [_evaluate_task(task) for task in tasks]

    result = SweepResult(rows=[])
    for point, seed, row, error in outcomes:
        if row is not None:
            result.rows.append(row)
            continue
        logger.warning(
            "sweep_point_failed",
            epsilon_s=point.epsilon_s, e_m=point.e_m, delta=point.delta, seed=seed, detail=error,
        )
        result.failed.append({"epsilon_s": point.epsilon_s, "e_m": point.e_m, "delta": point.delta, "seed": seed})
    result.rows.sort(key=lambda r: (r.epsilon_s, r.e_m, r.delta, r.seed))
    result.failed.sort(key=lambda f: (f["epsilon_s"], f["e_m"], f["delta"], f["seed"]))
    logger.info("sweep_finished", rows=len(result.rows), failed=len(result.failed))
    return result


def run_sweep(
    config: SweepConfig,
    scenario: Scenario,
    out_dir: Path,
    max_workers: int = 1,
    command: str = "sweep",
) -> SweepResult:
    """Run a configured sweep and write the result CSV and its manifest."""
    out_dir = Path(out_dir)
    header = make_header(command, config)
    grid = sweep_grid(config.epsilon_s, config.e_m, config.delta)
    result = sweep(scenario, grid, config.trials, config.seeds, max_workers=max_workers)
    write_sweep_csv(out_dir / SWEEP_FILENAME, result.rows, header)
    write_json(out_dir / MANIFEST_FILENAME, Manifest(
        header=header,
        scenario=config.scenario.name,
        seeds=list(config.seeds),
        trials=config.trials,
        grid_points=len(grid),
        failed_points=result.failed,
        files=[SWEEP_FILENAME],
    ))
    return result
