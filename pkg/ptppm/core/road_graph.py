"""
Weighted directed road graph over map cells.

Edges are directed: (i -> j) and (j -> i) are distinct entries. Weights
default to the center distance of the two cells.
"""
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from ..constants import NeighborMode
from .errors import ConfigError, NoSuchEdge, UnknownVertex
from .grid_map import CellId, GridMap, distance


@dataclass(frozen=True)
class RoadGraph:
    """Directed graph G = <V, E> with positive edge weights; never mutated after from_edges."""
    vertices: frozenset[int]
    edges: Mapping[tuple[int, int], float]
    _out: Mapping[int, frozenset[int]] = field(repr=False, compare=False)
    _in: Mapping[int, frozenset[int]] = field(repr=False, compare=False)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[int, int] | tuple[int, int, Optional[float]]],
        grid_map: GridMap,
        vertices: Optional[Iterable[int]] = None,
    ) -> "RoadGraph":
        """
        Build a graph from (from, to[, weight]) tuples.

        A missing or None weight defaults to the center distance. Vertices
        default to every map cell; edge endpoints must be vertices.
        """
        verts = frozenset(int(v) for v in (vertices if vertices is not None else range(grid_map.n_cells)))
        for v in verts:
            grid_map.check_cell(v)

        weights: dict[tuple[int, int], float] = {}
        out: dict[int, set[int]] = {v: set() for v in verts}
        inc: dict[int, set[int]] = {v: set() for v in verts}
        for edge in edges:
            i, j = int(edge[0]), int(edge[1])
            w = edge[2] if len(edge) > 2 else None
            if i == j:
                raise ConfigError(f"self-loop on cell {i}")
            if i not in verts or j not in verts:
                raise UnknownVertex(f"edge ({i} -> {j}) has an endpoint outside the vertex set")
            weight = distance(i, j, grid_map) if w is None else float(w)
            if weight <= 0:
                raise ConfigError(f"edge ({i} -> {j}) has non-positive weight {weight}")
            weights[(i, j)] = weight
            out[i].add(j)
            inc[j].add(i)

        return cls(
            vertices=verts,
            edges=weights,
            _out={v: frozenset(s) for v, s in out.items()},
            _in={v: frozenset(s) for v, s in inc.items()},
        )

    def __len__(self) -> int:
        return len(self.edges)


def adjacent_nodes(i: int, graph: RoadGraph, mode: NeighborMode = NeighborMode.OUT) -> frozenset[CellId]:
    """
    Neighbors B_i of a vertex.

    OUT returns {j : (i -> j) in E}; UNION also includes in-neighbors.

    Raises:
        UnknownVertex: if i is not a vertex.
    """
    i = int(i)
    if i not in graph.vertices:
        raise UnknownVertex(f"cell {i} is not a graph vertex")
    if NeighborMode(mode) is NeighborMode.UNION:
        return frozenset(CellId(j) for j in graph._out[i] | graph._in[i])
    return frozenset(CellId(j) for j in graph._out[i])


def edge_weight(i: int, j: int, graph: RoadGraph) -> float:
    """
    Stored weight of the directed edge (i -> j) in meters.

    Raises:
        NoSuchEdge: if the edge is absent.
    """
    try:
        return graph.edges[(int(i), int(j))]
    except KeyError:
        raise NoSuchEdge(f"no edge {i} -> {j}") from None


def grid_graph(grid_map: GridMap) -> RoadGraph:
    """Default road graph: 4-adjacent cells connected in both directions."""
    edges: list[tuple[int, int]] = []
    for row in range(grid_map.rows):
        for col in range(grid_map.cols):
            cell = row * grid_map.cols + col
            if col + 1 < grid_map.cols:
                edges += [(cell, cell + 1), (cell + 1, cell)]
            if row + 1 < grid_map.rows:
                edges += [(cell, cell + grid_map.cols), (cell + grid_map.cols, cell)]
    return RoadGraph.from_edges(edges, grid_map)


def parse_edge_list(lines: Iterable[str], grid_map: GridMap) -> RoadGraph:
    """
    Parse `from_index to_index [weight_m]` lines into a graph.

    Blank lines and lines starting with '#' are ignored.

    Raises:
        ConfigError: on a malformed line.
    """
    edges: list[tuple[int, int, Optional[float]]] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ConfigError(f"edge list line {line_no}: expected 2 or 3 fields, got {len(parts)}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else None
        except ValueError:
            raise ConfigError(f"edge list line {line_no}: not numeric: {line!r}") from None
        edges.append((i, j, w))
    return RoadGraph.from_edges(edges, grid_map)
