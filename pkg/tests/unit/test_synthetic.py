"""
Unit tests for ptppm/services/synthetic.py
"""
import numpy as np
import pytest

from ptppm.core.errors import EmptyInput
from ptppm.core.mobility import Trajectory
from ptppm.core.road_graph import RoadGraph, adjacent_nodes, grid_graph
from ptppm.services.ingest import discretize, parse_geolife, parse_tdrive
from ptppm.services.synthetic import (
    gps_records_for,
    random_walk_trajectories,
    to_geolife_lines,
    to_tdrive_lines,
)


# ---------------------------------------------------------------------------
# random_walk_trajectories
# ---------------------------------------------------------------------------

def test_walks_follow_graph_edges(grid8):
    graph = grid_graph(grid8)
    walks = random_walk_trajectories(grid8, graph, 10, 15, 0.7, np.random.default_rng(1))
    assert len(walks) == 10
    for walk in walks:
        assert len(walk) == 15
        for a, b in zip(walk.cells, walk.cells[1:]):
            assert b in adjacent_nodes(a, graph)


def test_walk_ids_and_timesteps(grid8):
    walks = random_walk_trajectories(grid8, grid_graph(grid8), 3, 4, 0.5, np.random.default_rng(0))
    assert [w.user_id for w in walks] == ["syn0000", "syn0001", "syn0002"]
    assert all(w.timesteps == [0, 1, 2, 3] for w in walks)


def test_walks_are_seeded(grid8):
    graph = grid_graph(grid8)
    a = random_walk_trajectories(grid8, graph, 5, 10, 0.8, np.random.default_rng(3))
    b = random_walk_trajectories(grid8, graph, 5, 10, 0.8, np.random.default_rng(3))
    assert [w.cells for w in a] == [w.cells for w in b]


def test_full_persistence_goes_straight_until_blocked(grid8):
    graph = grid_graph(grid8)
    walk = random_walk_trajectories(grid8, graph, 1, 30, 1.0, np.random.default_rng(2))[0]
    # after the first move each step repeats the heading while the road continues
    for a, b, c in zip(walk.cells, walk.cells[1:], walk.cells[2:]):
        (ra, ca), (rb, cb), (rc, cc) = grid8.row_col(a), grid8.row_col(b), grid8.row_col(c)
        r2, c2 = rb + (rb - ra), cb + (cb - ca)
        if 0 <= r2 < grid8.rows and 0 <= c2 < grid8.cols:
            assert (rc, cc) == (r2, c2)


def test_walks_need_edges(grid4):
    with pytest.raises(EmptyInput):
        random_walk_trajectories(grid4, RoadGraph.from_edges([], grid4), 2, 5, 0.5, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# GPS fixes
# ---------------------------------------------------------------------------

def test_gps_records_discretize_back(grid8):
    traj = Trajectory.from_cells([0, 1, 9, 17, 17, 18], user_id="walker")
    records = gps_records_for(traj, grid8, fixes_per_step=3, rng=np.random.default_rng(4))
    assert len(records) == 18
    back = discretize(records, grid8)
    assert back.cells == traj.cells
    assert back.user_id == "walker"


def test_tdrive_lines_round_trip(grid8):
    traj = Trajectory.from_cells([3, 4, 12], user_id="42")
    lines = to_tdrive_lines(gps_records_for(traj, grid8))
    assert lines[0].startswith("42,2008-02-02 13:30:00,")
    assert discretize(parse_tdrive(lines).records, grid8).cells == [3, 4, 12]


def test_geolife_lines_round_trip(grid8):
    traj = Trajectory.from_cells([20, 21, 29, 37], user_id="007")
    lines = to_geolife_lines(gps_records_for(traj, grid8))
    assert len(lines) == 6 + 4
    parsed = parse_geolife(lines, user_id="007")
    assert parsed.lines_dropped == 0
    assert discretize(parsed.records, grid8).cells == [20, 21, 29, 37]
