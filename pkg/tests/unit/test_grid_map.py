"""
Unit tests for ptppm/core/grid_map.py

Tests cell geometry, coordinate mapping (edge rule included), distances and
Hilbert-curve ranks under all rotations.
"""
import math

import numpy as np
import pytest

from ptppm.constants import Rotation
from ptppm.core.errors import ConfigError, OutOfBounds
from ptppm.core.grid_map import (
    GridMap,
    HilbertIndex,
    cell_of_coords,
    coords_of_cell_center,
    diameter,
    distance,
    hilbert_rank,
    hilbert_rank_rc,
    rank_table,
    square_ranks,
)

CELL = 620.0


def _make_equator_map(rows=4, cols=4):
    # at the equator one degree of longitude is exactly METERS_PER_DEGREE_LAT
    return GridMap(rows=rows, cols=cols, cell_size_m=CELL, origin=(0.0, 0.0))


def _lat_lon(grid_map, x, y):
    return grid_map.to_latlon(x, y)


# ---------------------------------------------------------------------------
# GridMap
# ---------------------------------------------------------------------------

def test_grid_rejects_empty_dimensions():
    with pytest.raises(ConfigError):
        GridMap(rows=0, cols=3)


def test_grid_rejects_nonpositive_cell_size():
    with pytest.raises(ConfigError):
        GridMap(rows=2, cols=2, cell_size_m=0)


def test_cell_indexing_is_row_major(grid4):
    assert grid4.cell_at(0, 0) == 0
    assert grid4.cell_at(1, 0) == 4
    assert grid4.cell_at(3, 3) == 15
    assert grid4.row_col(6) == (1, 2)


def test_cell_at_out_of_range(grid4):
    with pytest.raises(OutOfBounds):
        grid4.cell_at(4, 0)


def test_row_col_out_of_range(grid4):
    with pytest.raises(OutOfBounds):
        grid4.row_col(16)


def test_out_of_bounds_is_value_error(grid4):
    # invalid-argument errors double as ValueError
    with pytest.raises(ValueError):
        grid4.check_cell(-1)


# ---------------------------------------------------------------------------
# cell_of_coords / coords_of_cell_center
# ---------------------------------------------------------------------------

def test_center_round_trip(grid8):
    for cell in range(grid8.n_cells):
        lat, lon = coords_of_cell_center(cell, grid8)
        assert cell_of_coords(lat, lon, grid8) == cell


def test_origin_corner_is_cell_zero():
    grid_map = _make_equator_map()
    assert cell_of_coords(0.0, 0.0, grid_map) == 0


def test_shared_vertical_edge_belongs_to_lower_column():
    grid_map = _make_equator_map()
    lat, lon = _lat_lon(grid_map, CELL, 0.5 * CELL)
    assert cell_of_coords(lat, lon, grid_map) == 0


def test_shared_horizontal_edge_belongs_to_lower_row():
    grid_map = _make_equator_map()
    lat, lon = _lat_lon(grid_map, 2.5 * CELL, 2 * CELL)
    assert cell_of_coords(lat, lon, grid_map) == grid_map.cell_at(1, 2)


def test_outer_edge_is_inside():
    grid_map = _make_equator_map()
    lat, lon = _lat_lon(grid_map, 4 * CELL, 4 * CELL)
    assert cell_of_coords(lat, lon, grid_map) == 15


def test_point_beyond_map_raises():
    grid_map = _make_equator_map()
    lat, lon = _lat_lon(grid_map, 4.5 * CELL, CELL)
    with pytest.raises(OutOfBounds):
        cell_of_coords(lat, lon, grid_map)
    assert not grid_map.contains(lat, lon)


def test_point_south_of_origin_raises():
    grid_map = _make_equator_map()
    with pytest.raises(OutOfBounds):
        cell_of_coords(-0.01, 0.001, grid_map)


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

def test_distance_between_diagonal_neighbors(grid4):
    assert distance(0, 5, grid4) == pytest.approx(CELL * math.sqrt(2))
    assert distance(5, 5, grid4) == 0.0


def test_distance_matrix_matches_pairwise(grid4):
    dist = grid4.distance_matrix
    assert dist.shape == (16, 16)
    np.testing.assert_allclose(dist, dist.T)
    assert np.all(np.diag(dist) == 0)
    for a, b in [(0, 15), (3, 12), (6, 9)]:
        assert dist[a, b] == pytest.approx(distance(a, b, grid4))


def test_triangle_inequality_on_every_triple():
    dist = GridMap(rows=6, cols=6, cell_size_m=CELL).distance_matrix
    # via[a, b, c] = d(a, b) + d(b, c) against d(a, c)
    via = dist[:, :, None] + dist[None, :, :]
    assert np.all(dist[:, None, :] <= via + 1e-9)


def test_distance_matrix_is_read_only(grid4):
    with pytest.raises(ValueError):
        grid4.distance_matrix[0, 1] = 0.0


def test_equal_offsets_give_identical_distances(grid8):
    dist = grid8.distance_matrix
    assert dist[0, 9] == dist[27, 36] == dist[54, 63]


def test_diameter(grid4):
    assert diameter([0, 15, 5], grid4) == pytest.approx(3 * math.sqrt(2) * CELL)
    assert diameter([7], grid4) == 0.0
    assert diameter([], grid4) == 0.0


# ---------------------------------------------------------------------------
# Hilbert ranks
# ---------------------------------------------------------------------------

def test_order_one_ranks():
    h = HilbertIndex(order=1)
    assert [hilbert_rank_rc(r, c, h) for r, c in [(0, 0), (1, 0), (1, 1), (0, 1)]] == [0, 1, 2, 3]


@pytest.mark.parametrize("rotation", list(Rotation))
@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
def test_ranks_form_a_permutation(order, rotation):
    side = 2 ** order
    ranks = square_ranks(HilbertIndex(order=order, rotation=rotation))
    assert ranks.shape == (side, side)
    assert sorted(ranks.reshape(-1).tolist()) == list(range(side * side))


@pytest.mark.parametrize("rotation", list(Rotation))
@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
def test_consecutive_ranks_are_adjacent(order, rotation):
    side = 2 ** order
    positions = np.argsort(square_ranks(HilbertIndex(order=order, rotation=rotation)).reshape(-1))
    rows, cols = np.divmod(positions, side)
    steps = np.abs(np.diff(rows)) + np.abs(np.diff(cols))
    assert np.all(steps == 1)


def test_half_turn_mirrors_both_axes():
    r0 = square_ranks(HilbertIndex(order=2, rotation=Rotation.R0))
    r180 = square_ranks(HilbertIndex(order=2, rotation=Rotation.R180))
    np.testing.assert_array_equal(r180, r0[::-1, ::-1])


def test_rotations_differ():
    tables = {r: square_ranks(HilbertIndex(order=2, rotation=r)).tobytes() for r in Rotation}
    assert len(set(tables.values())) == 4


def test_hilbert_rank_rc_outside_square():
    with pytest.raises(OutOfBounds):
        hilbert_rank_rc(2, 0, HilbertIndex(order=1))


def test_hilbert_order_limit():
    with pytest.raises(ConfigError):
        HilbertIndex(order=17)


def test_for_map_embeds_rectangular_grid():
    grid_map = GridMap(rows=3, cols=5)
    assert HilbertIndex.for_map(grid_map).side == 8


def test_rank_table_matches_hilbert_rank():
    grid_map = GridMap(rows=3, cols=5)
    for rotation in Rotation:
        table = rank_table(grid_map, rotation)
        h = HilbertIndex.for_map(grid_map, rotation)
        assert table.shape == (15,)
        assert len(set(table.tolist())) == 15
        for cell in range(15):
            assert table[cell] == hilbert_rank(cell, h, grid_map)
