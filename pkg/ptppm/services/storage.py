"""
File persistence for every engine artifact.

JSON documents are written with sorted keys and a `header` object; CSV
tables start with a `#` provenance line; JSON-lines record files start with
a header line. Nothing time-dependent is written, so reruns are
byte-identical.
"""
import json
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Type, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from ..constants import SWEEP_COLUMNS, TRAJECTORY_COLUMNS
from ..core.adversary import AttackOutcome
from ..core.budget import BudgetAllocation
from ..core.errors import ConfigError, OutOfBounds, UnknownVertex
from ..core.grid_map import GridMap
from ..core.mobility import ProbVector, Trajectory, TransitionMatrix
from ..core.pipeline import ReleaseRecord
from ..core.pls import ProtectionLocationSet
from ..core.road_graph import RoadGraph, parse_edge_list
from ..logger import get_logger
from ..models import (
    AttackTrace,
    AttackTraceStep,
    BudgetDocument,
    Header,
    PLSDump,
    ReleaseRecordModel,
    SensitivityProfileModel,
    SweepRow,
)

logger = get_logger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

MATRIX_FLOAT_FORMAT = "%.17g"


# ============================================================================
# JSON
# ============================================================================

def _dumps(payload: Any, indent: Optional[int] = 2) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, indent=indent, ensure_ascii=False)


def write_json(path: Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dumps(payload) + "\n", encoding="utf-8")
    return path


def read_model(path: Path, model: Type[ModelT]) -> ModelT:
    """
    Load and validate a JSON document.

    Raises:
        ConfigError: if the file is missing, not JSON, or fails validation.
    """
    path = Path(path)
    try:
        return model.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__} in {path}: {e.error_count()} error(s); {e.errors()[0]['msg']}") from None


def _header_line(header: Header) -> str:
    return f"# {header.tool} {header.version} command={header.command} config_hash={header.config_hash}\n"


# ============================================================================
# RELEASE RECORDS
# ============================================================================

def pls_to_model(pls: ProtectionLocationSet) -> PLSDump:
    return PLSDump(
        cells=list(pls.cells),
        anchor=pls.anchor,
        diameter_m=pls.diameter_m,
        e_value=pls.e_value,
        rotation=None if pls.rotation is None else pls.rotation.value,
    )


def record_to_model(record: ReleaseRecord, include_posterior: bool = True) -> ReleaseRecordModel:
    return ReleaseRecordModel(
        t=record.t,
        true_cell=record.true_cell,
        protected_cell=record.protected_cell,
        dset_size=record.dset_size,
        released=record.released,
        epsilon_used=record.epsilon_used,
        e_m_used=record.e_m_used,
        e_m_adjustments=record.e_m_adjustments,
        mechanism=record.mechanism.value,
        pls=None if record.pls is None else pls_to_model(record.pls),
        posterior=record.posterior.p.tolist() if include_posterior else [],
    )


def write_records(path: Path, header: Header, records: Iterable[ReleaseRecord]) -> Path:
    """JSON-lines: a header object, then one record per timestep."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps({"header": header.model_dump(mode="json")}, indent=None) + "\n")
        for record in records:
            fh.write(_dumps(record_to_model(record), indent=None) + "\n")
    return path


def read_records(path: Path) -> tuple[Header, list[ReleaseRecordModel]]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    if not lines:
        raise ConfigError(f"empty records file: {path}")
    header = Header.model_validate(json.loads(lines[0])["header"])
    return header, [ReleaseRecordModel.model_validate_json(line) for line in lines[1:] if line.strip()]


def posteriors_of(models: Sequence[ReleaseRecordModel]) -> list[ProbVector]:
    return [ProbVector(np.asarray(m.posterior)) for m in models]


# ============================================================================
# TRAJECTORIES / MATRICES / GRAPHS
# ============================================================================

def _read_csv(path: Path, **kwargs: Any) -> pd.DataFrame:
    try:
        return pd.read_csv(path, **kwargs)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise ConfigError(f"{path}: no data") from None
    except pd.errors.ParserError as e:
        raise ConfigError(f"{path}: {e}") from None


def write_trajectory_csv(path: Path, trajectory: Trajectory, header: Header) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(trajectory.steps), columns=list(TRAJECTORY_COLUMNS))
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_header_line(header))
        frame.to_csv(fh, index=False, lineterminator="\n")
    return path


def read_trajectory_csv(path: Path, user_id: Optional[str] = None) -> Trajectory:
    """
    Raises:
        ConfigError: if the file is missing, empty, unparsable, lacks the
            `t,cell_index` columns or holds non-integer values.
    """
    path = Path(path)
    frame = _read_csv(path, comment="#")
    missing = set(TRAJECTORY_COLUMNS) - set(frame.columns)
    if missing:
        raise ConfigError(f"{path}: missing column(s) {sorted(missing)}")
    try:
        steps = tuple(zip(frame["t"].astype(int), frame["cell_index"].astype(int)))
        return Trajectory(user_id=user_id or path.stem, steps=steps)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None


def write_transition_csv(path: Path, m: TransitionMatrix, header: Header) -> Path:
    """Dense row-major probabilities."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_header_line(header))
        pd.DataFrame(m.probs).to_csv(fh, index=False, header=False, float_format=MATRIX_FLOAT_FORMAT, lineterminator="\n")
    return path


def read_transition_csv(path: Path) -> TransitionMatrix:
    path = Path(path)
    frame = _read_csv(path, comment="#", header=None)
    try:
        return TransitionMatrix.from_probs(frame.to_numpy(dtype=float))
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None


def read_graph(path: Path, grid_map: GridMap) -> RoadGraph:
    """
    Raises:
        ConfigError: if the edge list is missing or malformed.
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            return parse_edge_list(fh, grid_map)
    except FileNotFoundError:
        raise ConfigError(f"graph file not found: {path}") from None
    except (UnknownVertex, OutOfBounds) as e:
        raise ConfigError(f"{path}: {e}") from None


def write_graph(path: Path, graph: RoadGraph) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{i} {j} {w!r}" for (i, j), w in sorted(graph.edges.items())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ============================================================================
# BUDGETS / ATTACKS / SWEEPS
# ============================================================================

def budget_document(allocation: BudgetAllocation, header: Header) -> BudgetDocument:
    return BudgetDocument(
        header=header,
        epsilon_s=allocation.epsilon_s,
        sensitive=allocation.sensitive,
        adjacent=allocation.adjacent,
        resolved=allocation.resolved,
        profiles={
            cell: SensitivityProfileModel(
                stay_duration=p.stay_duration,
                access_frequency=p.access_frequency,
                semantic_class=p.semantic_class,
                sensitivity=p.sensitivity,
            )
            for cell, p in allocation.profiles.items()
        },
        pair_evaluations=allocation.pair_evaluations,
    )


def read_budget(path: Path) -> BudgetAllocation:
    doc = read_model(path, BudgetDocument)
    return BudgetAllocation(
        epsilon_s=doc.epsilon_s,
        sensitive=dict(doc.sensitive),
        adjacent=dict(doc.adjacent),
        resolved=dict(doc.resolved),
        pair_evaluations=doc.pair_evaluations,
    )


def attack_trace(
    outcomes: Sequence[AttackOutcome],
    posteriors: Sequence[ProbVector],
    header: Header,
    mode: str,
) -> AttackTrace:
    return AttackTrace(
        header=header,
        mode=mode,
        steps=[
            AttackTraceStep(
                t=o.t,
                released=o.released,
                inferred=int(o.inferred),
                expected_error_m=o.expected_error_m,
                success_prob=o.success_prob,
                hit=o.hit,
                posterior_max=float(post.p.max()),
                posterior_support=int(np.count_nonzero(post.p)),
            )
            for o, post in zip(outcomes, posteriors)
        ],
    )


def write_sweep_csv(path: Path, rows: Sequence[SweepRow], header: Header) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=list(SWEEP_COLUMNS))
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_header_line(header))
        frame.to_csv(fh, index=False, lineterminator="\n")
    logger.info("sweep_written", path=str(path), rows=len(rows))
    return path


def read_sweep_csv(path: Path) -> pd.DataFrame:
    return _read_csv(Path(path), comment="#")
