"""
Command-line front end.

    python -m ptppm gen     --out DIR [--rows R --cols C --trajectories N --length L --persistence P]
                            [--sensitive CELL ...] [--seed S]
    python -m ptppm ingest  --input FILE --format {tdrive,geolife} --map-config MAP --out DIR
    python -m ptppm budget  --scenario FILE [--epsilon-s E] --out FILE
    python -m ptppm run     (--scenario FILE | --map-config MAP) [--trajectory CSV] [--graph EDGES]
                            [--sensitive CELL ...] [--epsilon-s E] [--e-m M] [--delta D]
                            [--mechanism {pf,exp,uniform}] [--seed S] --out DIR
    python -m ptppm sweep   --config FILE --out-dir DIR [--parallel N]

Exit codes: 0 success, 2 configuration or input error, 3 infeasible step.
Logs go to stderr as JSON lines.
"""
import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import get_settings
from .constants import (
    BUDGET_FILENAME,
    EXIT_CONFIG_ERROR,
    EXIT_INFEASIBLE,
    EXIT_OK,
    GRAPH_FILENAME,
    INGEST_REPORT_FILENAME,
    MAP_CONFIG_FILENAME,
    RECORDS_FILENAME,
    SUMMARY_FILENAME,
    TOOL_NAME,
    AttackMode,
    InfeasiblePolicy,
    MechanismTag,
    TraceFormat,
)
from .core.adversary import attack_trajectory
from .core.errors import ConfigError, Infeasible, PrivacyEngineError
from .core.metrics import StepMetrics, evaluate_records
from .core.mobility import ProbVector, Trajectory, propagate_prior
from .core.pipeline import PipelineConfig, ReleaseRecord, privacy_accounting, run_pipeline
from .core.road_graph import grid_graph
from .logger import get_logger
from .logger.config import configure_logging
from .models import (
    AttackSummary,
    Header,
    IngestReport,
    MapConfig,
    ParseIssueModel,
    RunSummary,
    ScenarioConfig,
    SweepConfig,
)
from .services.ingest import count_out_of_bounds, discretize_by_user, read_trace_file
from .services.scenario import allocate_budgets, build_scenario, pipeline_config
from .services.storage import (
    attack_trace,
    budget_document,
    read_model,
    read_trajectory_csv,
    write_graph,
    write_json,
    write_records,
    write_trajectory_csv,
)
from .services.sweep import run_sweep
from .services.synthetic import random_walk_trajectories
from .utils import make_header

logger = get_logger(__name__)

NO_PLS_NOTE = "uniform release over the delta-location set; no PLS stage"


PAYLOAD_EXCLUDED_ARGS = frozenset({"handler", "out", "out_dir", "log_level"})


def _args_payload(args: argparse.Namespace) -> dict[str, Any]:
    """Arguments that shape the output; destinations and verbosity do not."""
    return {k: v for k, v in sorted(vars(args).items()) if k not in PAYLOAD_EXCLUDED_ARGS}


def _safe_name(user_id: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in user_id) or "user"


# ============================================================================
# GEN
# ============================================================================

def cmd_gen(args: argparse.Namespace) -> int:
    """Synthetic scenario: map, grid road graph, random-walk trajectories and a scenario file."""
    settings = get_settings()
    out = Path(args.out)
    map_config = MapConfig(rows=args.rows, cols=args.cols, cell_size_m=args.cell_size or settings.cell_size_m)
    grid_map = map_config.to_grid_map(settings)
    graph = grid_graph(grid_map)
    walks = random_walk_trajectories(
        grid_map, graph, args.trajectories, args.length, args.persistence, np.random.default_rng(args.seed),
    )
    header = make_header("gen", _args_payload(args))

    write_json(out / MAP_CONFIG_FILENAME, map_config)
    write_graph(out / GRAPH_FILENAME, graph)
    names = []
    for walk in walks:
        name = f"trajectories/{walk.user_id}.csv"
        write_trajectory_csv(out / name, walk, header)
        names.append(name)
    scenario = ScenarioConfig(
        name=args.name,
        map=map_config,
        graph=GRAPH_FILENAME,
        trajectories=names,
        sensitive=sorted(set(args.sensitive or [])),
    )
    write_json(out / "scenario.json", scenario)
    logger.info("scenario_generated", out=str(out), trajectories=len(walks))
    return EXIT_OK


# ============================================================================
# INGEST
# ============================================================================

def cmd_ingest(args: argparse.Namespace) -> int:
    """Parse a GPS log, discretize per user, write trajectory CSVs and a report."""
    map_config = read_model(Path(args.map_config), MapConfig)
    grid_map = map_config.to_grid_map()
    fmt = TraceFormat(args.format)
    parsed = read_trace_file(Path(args.input), fmt, allow_empty=True)
    out = Path(args.out)
    header = make_header("ingest", {"input": str(args.input), "format": fmt.value, "map": map_config.model_dump(mode="json")})

    trajectories: dict[str, Trajectory] = discretize_by_user(parsed.records, grid_map) if parsed.records else {}
    for uid, trajectory in trajectories.items():
        write_trajectory_csv(out / f"{_safe_name(uid)}.csv", trajectory, header)
    write_json(out / INGEST_REPORT_FILENAME, IngestReport(
        header=header,
        input=str(args.input),
        format=fmt.value,
        lines_total=parsed.lines_total,
        records_parsed=len(parsed.records),
        lines_dropped=parsed.lines_dropped,
        fixes_out_of_bounds=count_out_of_bounds(parsed.records, grid_map),
        trajectories={uid: len(t) for uid, t in trajectories.items()},
        issues=[ParseIssueModel(line_no=i.line_no, line=i.line, reason=i.reason) for i in parsed.issues],
    ))
    if not parsed.records:
        raise ConfigError(f"no valid records in {args.input} ({parsed.lines_dropped} line(s) rejected)")
    if not trajectories:
        raise ConfigError(f"no fix in {args.input} falls inside the map")
    return EXIT_OK


# ============================================================================
# SCENARIO FROM ARGUMENTS
# ============================================================================

def _check_release_args(args: argparse.Namespace) -> None:
    """Reject out-of-range release parameters before any file is read."""
    epsilon_s = getattr(args, "epsilon_s", None)
    if epsilon_s is not None and epsilon_s <= 0:
        raise ConfigError(f"--epsilon-s must be > 0, got {epsilon_s}")
    e_m = getattr(args, "e_m", None)
    if e_m is not None and e_m <= 0:
        raise ConfigError(f"--e-m must be > 0, got {e_m}")
    delta = getattr(args, "delta", None)
    if delta is not None and not 0.0 < delta < 1.0:
        raise ConfigError(f"--delta must be in (0, 1), got {delta}")


def _scenario_config(args: argparse.Namespace) -> tuple[ScenarioConfig, Path]:
    """A scenario file, or one assembled from --map-config/--graph/--trajectory."""
    _check_release_args(args)
    overrides: dict[str, Any] = {}
    if args.sensitive is not None:
        overrides["sensitive"] = args.sensitive
    if getattr(args, "epsilon_s", None) is not None:
        overrides["epsilon_s"] = args.epsilon_s

    if args.scenario:
        path = Path(args.scenario)
        config = read_model(path, ScenarioConfig)
        if args.graph:
            overrides["graph"] = str(Path(args.graph).resolve())
        return config.model_copy(update=overrides), path.parent

    if not args.map_config:
        raise ConfigError("either --scenario or --map-config is required")
    trajectory = getattr(args, "trajectory", None)
    history = list(getattr(args, "history", None) or [])
    if trajectory:
        history.insert(0, trajectory)
    if not history:
        raise ConfigError("no trajectory given (--trajectory or --history)")
    config = ScenarioConfig(
        name=getattr(args, "name", None) or "cli",
        map=read_model(Path(args.map_config), MapConfig),
        graph=args.graph,
        trajectories=history,
        **overrides,
    )
    return config, Path(".")


def cmd_budget(args: argparse.Namespace) -> int:
    """Run PPBA over a scenario's history and write the allocation."""
    config, base = _scenario_config(args)
    scenario = build_scenario(config, base_dir=base)
    allocation = allocate_budgets(scenario, args.epsilon_s)
    if allocation is None:
        raise ConfigError("scenario has no sensitive cells")
    header = make_header("budget", config)
    write_json(Path(args.out), budget_document(allocation, header))
    return EXIT_OK


# ============================================================================
# RUN
# ============================================================================

def _mean(values: Sequence[float]) -> Optional[float]:
    return float(np.mean(values)) if len(values) else None


def _summarize(
    records: Sequence[ReleaseRecord],
    steps: Sequence[StepMetrics],
    cfg: PipelineConfig,
    user_id: str,
    epsilon_s: float,
    header: Header,
) -> RunSummary:
    accounting = privacy_accounting(records)
    diameters = [r.pls.diameter_m for r in records if r.pls is not None]
    return RunSummary(
        header=header,
        user_id=user_id,
        mechanism=cfg.mechanism.value,
        pls_stage=cfg.mechanism.uses_pls,
        note="" if cfg.mechanism.uses_pls else NO_PLS_NOTE,
        steps=len(records),
        skipped_steps=len(records) - accounting.released_steps,
        per_step_cost=list(accounting.per_step_cost),
        total_budget_consumed=accounting.total_cost,
        max_step_epsilon=accounting.max_epsilon,
        epsilon_s=epsilon_s,
        claimed_trajectory_bound=2.0 * epsilon_s,
        qos_loss_mean=float(np.mean([s.qos_loss for s in steps])),
        dset_size_mean=float(np.mean([r.dset_size for r in records])),
        pls_diameter_mean=_mean(diameters),
        attacks={
            AttackMode.OPTIMAL.value: AttackSummary(
                privacy_mean=float(np.mean([s.privacy_optimal for s in steps])),
                success_mean=float(np.mean([s.success_optimal for s in steps])),
                realized_error_mean=_mean([s.attack_error_m for s in steps if s.attack_error_m is not None]),
            ),
            AttackMode.BAYESIAN.value: AttackSummary(
                privacy_mean=float(np.mean([s.privacy_bayesian for s in steps])),
                success_mean=float(np.mean([s.success_bayesian for s in steps])),
                realized_hit_rate=_mean([float(s.attack_hit) for s in steps if s.attack_hit is not None]),
            ),
        },
    )


def cmd_run(args: argparse.Namespace) -> int:
    """Release one trajectory, evaluate both attacks, write records, summary and attack traces."""
    settings = get_settings()
    config, base = _scenario_config(args)
    update: dict[str, Any] = {"on_infeasible": InfeasiblePolicy.RAISE}
    if args.mechanism:
        update["mechanism"] = MechanismTag(args.mechanism)
    config = config.model_copy(update=update)
    scenario = build_scenario(config, base_dir=base)

    if args.scenario and args.trajectory:
        trajectory = read_trajectory_csv(Path(args.trajectory))
    else:
        trajectory = scenario.trajectories[0]
    cfg = pipeline_config(scenario, epsilon_s=args.epsilon_s, e_m=args.e_m, delta=args.delta)
    epsilon_s = args.epsilon_s if args.epsilon_s is not None else (config.epsilon_s or settings.epsilon_s)

    header = make_header("run", {
        "scenario": config.model_dump(mode="json"),
        "trajectory": list(trajectory.steps),
        "epsilon_s": epsilon_s,
        "e_m": cfg.e_m,
        "delta": cfg.delta,
        "seed": args.seed,
    })
    records = run_pipeline(trajectory, cfg, rng_seed=args.seed)
    steps = evaluate_records(records, cfg)

    out = Path(args.out)
    write_records(out / RECORDS_FILENAME, header, records)
    write_json(out / SUMMARY_FILENAME, _summarize(records, steps, cfg, trajectory.user_id, epsilon_s, header))

    m = cfg.attacker_matrix
    initial = propagate_prior(cfg.start_posterior, m)
    posteriors = _attacker_posteriors(records, cfg)
    for mode in AttackMode:
        outcomes = attack_trajectory(
            [r.released for r in records], [r.channel for r in records], initial, m, mode, cfg.grid_map,
            [r.true_cell for r in records], [r.t for r in records],
        )
        write_json(out / f"attack_{mode.value}.json", attack_trace(outcomes, posteriors, header, mode.value))
    return EXIT_OK


def _attacker_posteriors(records: Sequence[ReleaseRecord], cfg: PipelineConfig) -> list[ProbVector]:
    """The attacker's posterior chain (its matrix may differ from the user's)."""
    m = cfg.attacker_matrix
    post = cfg.start_posterior
    chain = []
    for record in records:
        prior = propagate_prior(post, m)
        if record.released is None:
            post = prior
        else:
            post = ProbVector.normalized(prior.p * record.channel.likelihood(record.released))
        chain.append(post)
    return chain


# ============================================================================
# SWEEP
# ============================================================================

def cmd_sweep(args: argparse.Namespace) -> int:
    """Run a sweep config and write the result CSV plus manifest."""
    path = Path(args.config)
    config = read_model(path, SweepConfig)
    scenario = build_scenario(config.scenario, base_dir=path.parent)
    workers = args.parallel if args.parallel is not None else get_settings().sweep_max_workers
    run_sweep(config, scenario, Path(args.out_dir), max_workers=max(1, workers))
    return EXIT_OK


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="Personalized trajectory privacy engine.")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    parser.add_argument("--log-level", default=None, help="override PTPPM_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic scenario")
    gen.add_argument("--out", required=True)
    gen.add_argument("--name", default="synthetic")
    gen.add_argument("--rows", type=int, default=16)
    gen.add_argument("--cols", type=int, default=16)
    gen.add_argument("--cell-size", type=float, default=None)
    gen.add_argument("--trajectories", type=int, default=40)
    gen.add_argument("--length", type=int, default=30)
    gen.add_argument("--persistence", type=float, default=0.8)
    gen.add_argument("--sensitive", type=int, nargs="*", default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(handler=cmd_gen)

    ingest = sub.add_parser("ingest", help="discretize a GPS log")
    ingest.add_argument("--input", required=True)
    ingest.add_argument("--format", choices=[f.value for f in TraceFormat], default=TraceFormat.TDRIVE.value)
    ingest.add_argument("--map-config", required=True)
    ingest.add_argument("--out", required=True)
    ingest.set_defaults(handler=cmd_ingest)

    def _scenario_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", default=None, help="scenario JSON")
        p.add_argument("--map-config", default=None)
        p.add_argument("--graph", default=None, help="edge list; 4-adjacent grid when omitted")
        p.add_argument("--trajectory", default=None, help="trajectory CSV (t,cell_index)")
        p.add_argument("--history", nargs="*", default=None, help="extra trajectory CSVs for M and PPBA")
        p.add_argument("--sensitive", type=int, nargs="*", default=None)
        p.add_argument("--epsilon-s", dest="epsilon_s", type=float, default=None)

    budget = sub.add_parser("budget", help="allocate per-cell privacy budgets")
    _scenario_args(budget)
    budget.add_argument("--out", default=BUDGET_FILENAME)
    budget.set_defaults(handler=cmd_budget)

    run = sub.add_parser("run", help="release a trajectory and evaluate attacks")
    _scenario_args(run)
    run.add_argument("--e-m", dest="e_m", type=float, default=None)
    run.add_argument("--delta", type=float, default=None)
    run.add_argument("--mechanism", choices=[MechanismTag.PF.value, MechanismTag.EXP.value, MechanismTag.UNIFORM.value])
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True)
    run.set_defaults(handler=cmd_run)

    sweep = sub.add_parser("sweep", help="sweep (epsilon_s, E_m, delta) grids")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out-dir", required=True)
    sweep.add_argument("--parallel", type=int, default=None)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or get_settings().log_level)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except Infeasible as e:
        logger.error("infeasible", command=args.command, timestep=e.timestep, detail=str(e))
        print(f"{TOOL_NAME}: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (PrivacyEngineError, ValidationError, ValueError, OSError) as e:
        logger.error("command_failed", command=args.command, detail=str(e))
        print(f"{TOOL_NAME}: error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
