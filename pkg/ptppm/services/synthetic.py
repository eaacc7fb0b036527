"""
Synthetic mobility: biased random walks on the road graph and GPS fixes
generated from known cell trajectories.
"""
from datetime import datetime, timedelta
from typing import Optional

import numpy as np

from ..constants import GEOLIFE_TIME_FORMAT, TDRIVE_TIME_FORMAT
from ..core.errors import EmptyInput
from ..core.grid_map import GridMap, coords_of_cell_center
from ..core.mobility import Trajectory
from ..core.road_graph import RoadGraph, adjacent_nodes
from ..logger import get_logger
from .ingest import GpsRecord

logger = get_logger(__name__)

DEFAULT_START_TIME = datetime(2008, 2, 2, 13, 30, 0)


# ============================================================================
# RANDOM WALKS
# ============================================================================

def _walk(
    start: int,
    length: int,
    graph: RoadGraph,
    grid_map: GridMap,
    persistence: float,
    rng: np.random.Generator,
) -> list[int]:
    cells = [start]
    heading: Optional[tuple[int, int]] = None
    for _ in range(length - 1):
        current = cells[-1]
        neighbors = sorted(adjacent_nodes(current, graph))
        if not neighbors:
            cells.append(current)
            continue
        row, col = grid_map.row_col(current)
        ahead = None
        if heading is not None:
            r, c = row + heading[0], col + heading[1]
            if 0 <= r < grid_map.rows and 0 <= c < grid_map.cols and grid_map.cell_at(r, c) in neighbors:
                ahead = int(grid_map.cell_at(r, c))
        if ahead is not None and rng.random() < persistence:
            nxt = ahead
        else:
            nxt = int(neighbors[rng.integers(len(neighbors))])
        nr, nc = grid_map.row_col(nxt)
        heading = (nr - row, nc - col)
        cells.append(nxt)
    return cells


def random_walk_trajectories(
    grid_map: GridMap,
    graph: RoadGraph,
    n_trajectories: int,
    length: int,
    persistence: float,
    rng: np.random.Generator,
) -> list[Trajectory]:
    """
    Biased random walks: each step keeps the previous heading with
    probability `persistence` when the road continues straight, otherwise
    moves to a uniformly chosen out-neighbor.

    Starts are uniform over vertices with at least one out-edge.

    Raises:
        EmptyInput: if the graph has no edges.
    """
    starts = sorted(v for v in graph.vertices if adjacent_nodes(v, graph))
    if not starts:
        raise EmptyInput("road graph has no edges to walk on")
    walks = [
        Trajectory.from_cells(
            _walk(int(starts[rng.integers(len(starts))]), length, graph, grid_map, persistence, rng),
            user_id=f"syn{k:04d}",
        )
        for k in range(n_trajectories)
    ]
    logger.info("walks_generated", n=n_trajectories, length=length, persistence=persistence)
    return walks


# ============================================================================
# GPS FIXES
# ============================================================================

def gps_records_for(
    trajectory: Trajectory,
    grid_map: GridMap,
    start_time: datetime = DEFAULT_START_TIME,
    fixes_per_step: int = 1,
    rng: Optional[np.random.Generator] = None,
) -> list[GpsRecord]:
    """
    GPS fixes at cell centers that discretize back to `trajectory`.

    Step k's fixes fall inside the k-th time bin after `start_time`, at
    whole-second offsets. The first fix sits on the bin boundary so the bins
    line up with the discretizer's anchor. Without an rng every fix is on
    its bin boundary.
    """
    step_s = int(grid_map.time_step_s)
    t_first = trajectory.timesteps[0]
    records: list[GpsRecord] = []
    for idx, (t, cell) in enumerate(trajectory.steps):
        lat, lon = coords_of_cell_center(cell, grid_map)
        if rng is None or (idx == 0):
            offsets = [0] * fixes_per_step
        else:
            offsets = sorted(int(o) for o in rng.integers(0, max(1, step_s), size=fixes_per_step))
        for offset in offsets:
            records.append(GpsRecord(
                user_id=trajectory.user_id,
                timestamp=start_time + timedelta(seconds=(t - t_first) * grid_map.time_step_s + offset),
                lon=lon,
                lat=lat,
            ))
    return records


def to_tdrive_lines(records: list[GpsRecord]) -> list[str]:
    return [
        f"{r.user_id},{r.timestamp.strftime(TDRIVE_TIME_FORMAT)},{r.lon:.6f},{r.lat:.6f}"
        for r in records
    ]


def to_geolife_lines(records: list[GpsRecord]) -> list[str]:
    """A complete .plt body, preamble included."""
    preamble = [
        "Geolife trajectory",
        "WGS 84",
        "Altitude is in Feet",
        "Reserved 3",
        "0,2,255,My Track,0,0,2,8421376",
        "0",
    ]
    epoch = datetime(1899, 12, 30)
    body = []
    for r in records:
        days = (r.timestamp - epoch).total_seconds() / 86400.0
        date, time = r.timestamp.strftime(GEOLIFE_TIME_FORMAT).split(" ")
        body.append(f"{r.lat:.6f},{r.lon:.6f},0,0,{days:.10f},{date},{time}")
    return preamble + body
