"""
Discretized map: cell geometry, distances and Hilbert-curve ranks.

Cells are indexed row-major from the origin corner. Rows grow northward and
columns grow eastward. Coordinates are projected equirectangularly at the
map origin, so all distances are planar meters between cell centers.

Hilbert convention (rotation 0, order 1, (row, col)):
    (0,0) -> 0, (1,0) -> 1, (1,1) -> 2, (0,1) -> 3
A rotation turns the curve clockwise about the center of the embedding
square: rank(cell, rot) = rank(inverse_rot(cell), 0).
"""
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NewType

import numpy as np
from scipy.spatial.distance import cdist

from ..constants import (
    DEFAULT_CELL_SIZE_M,
    DEFAULT_TIME_STEP_S,
    EDGE_TOLERANCE,
    MAX_HILBERT_ORDER,
    METERS_PER_DEGREE_LAT,
    Rotation,
)
from .errors import ConfigError, OutOfBounds

CellId = NewType("CellId", int)


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass(frozen=True)
class GridMap:
    """Uniform grid of square cells anchored at its south-west corner."""
    rows: int
    cols: int
    cell_size_m: float = DEFAULT_CELL_SIZE_M
    origin: tuple[float, float] = (0.0, 0.0)  # (lat, lon) of the (0,0) corner
    time_step_s: float = DEFAULT_TIME_STEP_S

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"grid needs rows >= 1 and cols >= 1, got {self.rows}x{self.cols}")
        if self.cell_size_m <= 0:
            raise ConfigError(f"cell_size_m must be > 0, got {self.cell_size_m}")
        if self.time_step_s <= 0:
            raise ConfigError(f"time_step_s must be > 0, got {self.time_step_s}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    @property
    def meters_per_degree_lon(self) -> float:
        return METERS_PER_DEGREE_LAT * math.cos(math.radians(self.origin[0]))

    @property
    def width_m(self) -> float:
        return self.cols * self.cell_size_m

    @property
    def height_m(self) -> float:
        return self.rows * self.cell_size_m

    def cell_at(self, row: int, col: int) -> CellId:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise OutOfBounds(f"(row={row}, col={col}) outside {self.rows}x{self.cols} grid")
        return CellId(row * self.cols + col)

    def row_col(self, cell: int) -> tuple[int, int]:
        self.check_cell(cell)
        return divmod(int(cell), self.cols)

    def check_cell(self, cell: int) -> None:
        if not 0 <= int(cell) < self.n_cells:
            raise OutOfBounds(f"cell {cell} outside [0, {self.n_cells})")

    @cached_property
    def centers(self) -> np.ndarray:
        """(n_cells, 2) array of planar (x_east, y_north) cell centers in meters."""
        rows, cols = np.divmod(np.arange(self.n_cells), self.cols)
        return np.column_stack(((cols + 0.5) * self.cell_size_m, (rows + 0.5) * self.cell_size_m))

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """Dense (n_cells, n_cells) matrix of center-to-center distances."""
        # Integer grid offsets keep equal distances bit-identical
        rows, cols = np.divmod(np.arange(self.n_cells), self.cols)
        grid = np.column_stack((rows, cols)).astype(float)
        matrix = cdist(grid, grid) * self.cell_size_m
        matrix.setflags(write=False)
        return matrix

    @property
    def diameter_m(self) -> float:
        return math.hypot((self.rows - 1) * self.cell_size_m, (self.cols - 1) * self.cell_size_m)

    # ------------------------------------------------------------------
    # Projection
    # ------------------------------------------------------------------

    def to_local(self, lat: float, lon: float) -> tuple[float, float]:
        """Project (lat, lon) to planar (x_east, y_north) meters from the origin."""
        lat0, lon0 = self.origin
        return (lon - lon0) * self.meters_per_degree_lon, (lat - lat0) * METERS_PER_DEGREE_LAT

    def to_latlon(self, x: float, y: float) -> tuple[float, float]:
        lat0, lon0 = self.origin
        return lat0 + y / METERS_PER_DEGREE_LAT, lon0 + x / self.meters_per_degree_lon

    def contains(self, lat: float, lon: float) -> bool:
        x, y = self.to_local(lat, lon)
        return _axis_index(x / self.cell_size_m, self.cols) is not None and \
            _axis_index(y / self.cell_size_m, self.rows) is not None


@dataclass(frozen=True)
class HilbertIndex:
    """Hilbert curve of the given order, turned clockwise by `rotation`."""
    order: int
    rotation: Rotation = Rotation.R0

    def __post_init__(self) -> None:
        if not 0 <= self.order <= MAX_HILBERT_ORDER:
            raise ConfigError(f"hilbert order must be in [0, {MAX_HILBERT_ORDER}], got {self.order}")
        object.__setattr__(self, "rotation", Rotation(self.rotation))

    @property
    def side(self) -> int:
        return 1 << self.order

    @classmethod
    def for_map(cls, grid_map: GridMap, rotation: Rotation = Rotation.R0) -> "HilbertIndex":
        """Smallest curve whose square embeds the grid."""
        side = max(grid_map.rows, grid_map.cols)
        return cls(order=max(0, math.ceil(math.log2(side))), rotation=rotation)


# ============================================================================
# COORDINATES
# ============================================================================

def _axis_index(u: float, size: int) -> int | None:
    """Index of the half-open interval containing u (in cell units), None if outside."""
    if u < -EDGE_TOLERANCE or u > size + EDGE_TOLERANCE:
        return None
    # Shared edges belong to the lower index
    return min(max(math.ceil(u - EDGE_TOLERANCE) - 1, 0), size - 1)


def cell_of_coords(lat: float, lon: float, grid_map: GridMap) -> CellId:
    """
    Return the cell whose square contains (lat, lon).

    Raises:
        OutOfBounds: if the point lies outside the map.
    """
    x, y = grid_map.to_local(lat, lon)
    col = _axis_index(x / grid_map.cell_size_m, grid_map.cols)
    row = _axis_index(y / grid_map.cell_size_m, grid_map.rows)
    if row is None or col is None:
        raise OutOfBounds(f"point ({lat}, {lon}) outside map")
    return CellId(row * grid_map.cols + col)


def coords_of_cell_center(cell: int, grid_map: GridMap) -> tuple[float, float]:
    """(lat, lon) of the cell center."""
    row, col = grid_map.row_col(cell)
    return grid_map.to_latlon((col + 0.5) * grid_map.cell_size_m, (row + 0.5) * grid_map.cell_size_m)


def distance(a: int, b: int, grid_map: GridMap) -> float:
    """Euclidean distance in meters between two cell centers."""
    ra, ca = grid_map.row_col(a)
    rb, cb = grid_map.row_col(b)
    return math.hypot(ra - rb, ca - cb) * grid_map.cell_size_m


def diameter(cells, grid_map: GridMap) -> float:
    """Maximum pairwise center distance over a cell collection (0 for fewer than two cells)."""
    idx = np.fromiter((int(c) for c in cells), dtype=np.int64)
    if idx.size < 2:
        return 0.0
    return float(grid_map.distance_matrix[np.ix_(idx, idx)].max())


# ============================================================================
# HILBERT CURVE
# ============================================================================

def _xy2d(side: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized Hilbert distance of (x, y) points on a side x side square."""
    x = x.astype(np.int64).copy()
    y = y.astype(np.int64).copy()
    d = np.zeros_like(x)
    s = side // 2
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        flip = (ry == 0) & (rx == 1)
        x = np.where(flip, side - 1 - x, x)
        y = np.where(flip, side - 1 - y, y)
        swap = ry == 0
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        s //= 2
    return d


def _unrotate(rows: np.ndarray, cols: np.ndarray, side: int, quarter_turns: int) -> tuple[np.ndarray, np.ndarray]:
    """Undo `quarter_turns` clockwise turns: (r, c) -> (side-1-c, r) per turn."""
    for _ in range(quarter_turns % 4):
        rows, cols = side - 1 - cols, rows
    return rows, cols


def hilbert_rank_rc(row: int, col: int, h: HilbertIndex) -> int:
    """Curve position of (row, col) on the embedding square."""
    if not (0 <= row < h.side and 0 <= col < h.side):
        raise OutOfBounds(f"(row={row}, col={col}) outside {h.side}x{h.side} square")
    r, c = _unrotate(np.array([row]), np.array([col]), h.side, h.rotation.quarter_turns)
    return int(_xy2d(h.side, c, r)[0])


def hilbert_rank(cell: int, h: HilbertIndex, grid_map: GridMap) -> int:
    """Curve position of a map cell along the (possibly rotated) curve."""
    row, col = grid_map.row_col(cell)
    return hilbert_rank_rc(row, col, h)


def square_ranks(h: HilbertIndex) -> np.ndarray:
    """(side, side) array whose [row, col] entry is the curve position."""
    rows, cols = np.divmod(np.arange(h.side * h.side), h.side)
    r, c = _unrotate(rows, cols, h.side, h.rotation.quarter_turns)
    return _xy2d(h.side, c, r).reshape(h.side, h.side)


@lru_cache(maxsize=64)
def rank_table(grid_map: GridMap, rotation: Rotation) -> np.ndarray:
    """Curve position of every map cell under `rotation`, indexed by CellId."""
    h = HilbertIndex.for_map(grid_map, rotation)
    ranks = square_ranks(h)[: grid_map.rows, : grid_map.cols].reshape(-1)
    ranks.setflags(write=False)
    return ranks
