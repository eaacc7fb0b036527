"""
GPS log ingestion.

Parses T-Drive and Geolife style logs into GpsRecords, then discretizes
them to grid-cell trajectories: one step per time bin of width
`time_step_s`, the last in-bounds fix of a bin wins, empty bins carry the
previous cell forward and leading empty bins are dropped. Bins are
anchored at the earliest fix.

Malformed lines never abort a parse. They come back as ParseIssue entries
and only a stream with no valid line at all is an error.
"""
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..constants import GEOLIFE_HEADER_LINES, GEOLIFE_TIME_FORMAT, TDRIVE_TIME_FORMAT, TraceFormat
from ..core.errors import ConfigError, EmptyInput, NoInBoundsFixes, OutOfBounds, ParseIssue
from ..core.grid_map import GridMap, cell_of_coords
from ..core.mobility import Trajectory
from ..logger import get_logger

logger = get_logger(__name__)


# ============================================================================
# DATA STRUCTURES
# ============================================================================

@dataclass(frozen=True)
class GpsRecord:
    user_id: str
    timestamp: datetime
    lon: float
    lat: float


@dataclass
class ParsedTrace:
    """Parse outcome: records in input order plus every rejected line."""
    records: list[GpsRecord]
    issues: list[ParseIssue] = field(default_factory=list)
    lines_total: int = 0

    @property
    def lines_dropped(self) -> int:
        return len(self.issues)


# ============================================================================
# PARSERS
# ============================================================================

def _coordinate(text: str, low: float, high: float, name: str) -> float:
    value = float(text)
    if not math.isfinite(value) or not low <= value <= high:
        raise ValueError(f"{name} {text} out of range")
    return value


def _finish(
    records: list[GpsRecord],
    issues: list[ParseIssue],
    lines_total: int,
    source: str,
    allow_empty: bool,
) -> ParsedTrace:
    if not records and not allow_empty:
        raise EmptyInput(f"no valid {source} records in {lines_total} line(s)")
    logger.info("trace_parsed", format=source, records=len(records), dropped=len(issues))
    return ParsedTrace(records=records, issues=issues, lines_total=lines_total)


def parse_tdrive(lines: Iterable[str], allow_empty: bool = False) -> ParsedTrace:
    """
    Parse T-Drive lines `id,YYYY-MM-DD HH:MM:SS,lon,lat`.

    Returns:
        ParsedTrace with records in input order

    Raises:
        EmptyInput: if no line parses (including an empty stream)
    """
    records: list[GpsRecord] = []
    issues: list[ParseIssue] = []
    line_no = 0
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            issues.append(ParseIssue(line_no, line, "blank line"))
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 4:
            issues.append(ParseIssue(line_no, line, f"expected 4 fields, got {len(fields)}"))
            continue
        try:
            records.append(GpsRecord(
                user_id=fields[0],
                timestamp=datetime.strptime(fields[1], TDRIVE_TIME_FORMAT),
                lon=_coordinate(fields[2], -180.0, 180.0, "longitude"),
                lat=_coordinate(fields[3], -90.0, 90.0, "latitude"),
            ))
        except ValueError as e:
            issues.append(ParseIssue(line_no, line, str(e)))
    return _finish(records, issues, line_no, TraceFormat.TDRIVE.value, allow_empty)


def parse_geolife(lines: Iterable[str], user_id: str = "0", allow_empty: bool = False) -> ParsedTrace:
    """
    Parse a Geolife .plt stream.

    The first six lines are a fixed preamble. Data lines read
    `lat,lon,0,altitude,days,date,time`.
    """
    records: list[GpsRecord] = []
    issues: list[ParseIssue] = []
    line_no = 0
    for line_no, raw in enumerate(lines, start=1):
        if line_no <= GEOLIFE_HEADER_LINES:
            continue
        line = raw.rstrip("\r\n")
        if not line.strip():
            issues.append(ParseIssue(line_no, line, "blank line"))
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 7:
            issues.append(ParseIssue(line_no, line, f"expected 7 fields, got {len(fields)}"))
            continue
        try:
            records.append(GpsRecord(
                user_id=user_id,
                timestamp=datetime.strptime(f"{fields[5]} {fields[6]}", GEOLIFE_TIME_FORMAT),
                lon=_coordinate(fields[1], -180.0, 180.0, "longitude"),
                lat=_coordinate(fields[0], -90.0, 90.0, "latitude"),
            ))
        except ValueError as e:
            issues.append(ParseIssue(line_no, line, str(e)))
    return _finish(records, issues, max(0, line_no - GEOLIFE_HEADER_LINES), TraceFormat.GEOLIFE.value, allow_empty)


def read_trace_file(
    path: Path,
    fmt: TraceFormat,
    user_id: Optional[str] = None,
    allow_empty: bool = False,
) -> ParsedTrace:
    """
    Parse a trace file in the given format.

    Geolife files carry no user id; it defaults to the file stem.

    Raises:
        ConfigError: if the file does not exist
        EmptyInput: if no line parses
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8", errors="replace") as fh:
            if fmt is TraceFormat.GEOLIFE:
                return parse_geolife(fh, user_id=user_id or path.stem, allow_empty=allow_empty)
            return parse_tdrive(fh, allow_empty=allow_empty)
    except FileNotFoundError:
        raise ConfigError(f"trace file not found: {path}") from None


# ============================================================================
# DISCRETIZATION
# ============================================================================

def _cell_or_none(record: GpsRecord, grid_map: GridMap) -> Optional[int]:
    try:
        return int(cell_of_coords(record.lat, record.lon, grid_map))
    except OutOfBounds:
        return None


def count_out_of_bounds(records: Sequence[GpsRecord], grid_map: GridMap) -> int:
    return sum(1 for r in records if _cell_or_none(r, grid_map) is None)


def discretize(records: Sequence[GpsRecord], grid_map: GridMap, user_id: Optional[str] = None) -> Trajectory:
    """
    Bin fixes into a cell trajectory with timesteps 0, 1, 2, ...

    Records are sorted by timestamp (stably, so equal timestamps keep input
    order and the later line wins).

    Raises:
        EmptyInput: if there are no records
        NoInBoundsFixes: if no fix lies inside the map
    """
    if not records:
        raise EmptyInput("no GPS records to discretize")
    ordered = sorted(records, key=lambda r: r.timestamp)
    t0 = ordered[0].timestamp
    step = grid_map.time_step_s

    last_in_bin: dict[int, int] = {}
    for record in ordered:
        cell = _cell_or_none(record, grid_map)
        if cell is None:
            continue
        last_in_bin[math.floor((record.timestamp - t0).total_seconds() / step)] = cell
    if not last_in_bin:
        raise NoInBoundsFixes(f"none of {len(records)} fix(es) fall inside the map")

    first, last = min(last_in_bin), max(last_in_bin)
    cells: list[int] = []
    current = last_in_bin[first]
    for b in range(first, last + 1):
        current = last_in_bin.get(b, current)
        cells.append(current)
    logger.debug("trace_discretized", fixes=len(records), steps=len(cells), bins_filled=len(last_in_bin))
    return Trajectory.from_cells(cells, user_id=user_id or ordered[0].user_id)


def discretize_by_user(records: Sequence[GpsRecord], grid_map: GridMap) -> dict[str, Trajectory]:
    """
    Discretize each user's fixes separately. Users without an in-bounds fix
    are left out (and logged); ids come back sorted.
    """
    by_user: dict[str, list[GpsRecord]] = defaultdict(list)
    for record in records:
        by_user[record.user_id].append(record)
    trajectories: dict[str, Trajectory] = {}
    for uid in sorted(by_user):
        try:
            trajectories[uid] = discretize(by_user[uid], grid_map, user_id=uid)
        except NoInBoundsFixes:
            logger.warning("user_outside_map", user_id=uid, fixes=len(by_user[uid]))
    return trajectories
