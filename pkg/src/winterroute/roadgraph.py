"""Routable directed road graphs from OSM XML or edge-list CSV, plus snapping.

A two-way OSM way produces one directed edge per direction; ``oneway=yes``
produces one. Edge ids are assigned in file order so identical input bytes
always build identical graphs. A uniform lat/lon cell grid over edge bounding
boxes backs nearest-edge queries; the ring search is exact (it always agrees
with a brute-force scan over all edges).
"""

from __future__ import annotations

import csv
import io
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, NamedTuple

from .geo import (
    METERS_PER_DEGREE,
    LatLon,
    haversine_m,
    point_polyline_distance_m,
    polyline_length_m,
)
from .ingest import _open_text

log = logging.getLogger(__name__)

KPH_TO_MS = 1.0 / 3.6

_BASE_SPEEDS_KPH = {
    "motorway": 90.0,
    "trunk": 80.0,
    "primary": 60.0,
    "secondary": 50.0,
    "tertiary": 50.0,
    "unclassified": 40.0,
    "residential": 30.0,
    "service": 20.0,
}

DEFAULT_SPEEDS_KPH = dict(_BASE_SPEEDS_KPH)
DEFAULT_SPEEDS_KPH.update({f"{k}_link": v for k, v in _BASE_SPEEDS_KPH.items()})

ROUTABLE_HIGHWAYS = frozenset(DEFAULT_SPEEDS_KPH)

FALLBACK_SPEED_KPH = 30.0

DEFAULT_SNAP_RADIUS_M = 50.0

# Grid cell edge in degrees (~550 m of latitude); tuned for city-scale graphs.
GRID_CELL_DEG = 0.005

TRAVEL_TIME_REL_TOL = 1e-6

EDGE_CSV_COLUMNS = (
    "from_node",
    "to_node",
    "from_lat",
    "from_lon",
    "from_height_m",
    "to_lat",
    "to_lon",
    "to_height_m",
    "osmid",
    "highway",
    "oneway",
    "length_m",
    "speed_kph",
    "travel_time_s",
    "bridge",
    "tunnel",
    "junction",
    "lanes",
    "geometry",
)


class GraphFormatError(ValueError):
    """Input could not be turned into a valid road graph."""


@dataclass(frozen=True)
class GraphNode:
    node_id: int
    lat: float
    lon: float
    height_m: float = 0.0


@dataclass(frozen=True)
class RoadEdge:
    edge_id: int
    osmid: int
    from_node: int
    to_node: int
    highway: str
    oneway: bool
    length_m: float
    speed_kph: float
    travel_time_s: float
    bridge: bool = False
    tunnel: bool = False
    junction: str | None = None
    lanes: int | None = None
    geometry: tuple[LatLon, ...] = ()


class SnapResult(NamedTuple):
    edge_id: int
    distance_m: float
    offset_fraction: float


class _GridIndex:
    """Uniform lat/lon grid mapping cells to the edges whose bbox covers them."""

    def __init__(self, cell_deg: float = GRID_CELL_DEG):
        self.cell_deg = cell_deg
        self.cells: dict[tuple[int, int], list[int]] = {}
        self.min_cell: tuple[int, int] | None = None
        self.max_cell: tuple[int, int] | None = None

    def _cell_of(self, lat: float, lon: float) -> tuple[int, int]:
        return (int(math.floor(lat / self.cell_deg)), int(math.floor(lon / self.cell_deg)))

    def insert(self, edge_id: int, polyline: tuple[LatLon, ...]) -> None:
        lats = [p[0] for p in polyline]
        lons = [p[1] for p in polyline]
        lo = self._cell_of(min(lats), min(lons))
        hi = self._cell_of(max(lats), max(lons))
        for ci in range(lo[0], hi[0] + 1):
            for cj in range(lo[1], hi[1] + 1):
                self.cells.setdefault((ci, cj), []).append(edge_id)
        if self.min_cell is None:
            self.min_cell, self.max_cell = lo, hi
        else:
            self.min_cell = (min(self.min_cell[0], lo[0]), min(self.min_cell[1], lo[1]))
            self.max_cell = (max(self.max_cell[0], hi[0]), max(self.max_cell[1], hi[1]))

    def cover_ring(self, center: tuple[int, int]) -> int:
        """Chebyshev radius beyond which no occupied cell can exist."""
        if self.min_cell is None or self.max_cell is None:
            return 0
        return max(
            abs(center[0] - self.min_cell[0]),
            abs(center[0] - self.max_cell[0]),
            abs(center[1] - self.min_cell[1]),
            abs(center[1] - self.max_cell[1]),
        )

    def ring_cells(self, center: tuple[int, int], ring: int) -> Iterable[tuple[int, int]]:
        ci, cj = center
        if ring == 0:
            yield (ci, cj)
            return
        for dj in range(-ring, ring + 1):
            yield (ci - ring, cj + dj)
            yield (ci + ring, cj + dj)
        for di in range(-ring + 1, ring):
            yield (ci + di, cj - ring)
            yield (ci + di, cj + ring)

    def bound_scale_m_per_deg(self) -> float:
        """Conservative meters-per-degree over the occupied grid area.

        Uses the cosine at the most poleward occupied latitude so the ring
        lower bound is monotone in the ring number, which the exactness of
        the early-termination rule in :func:`snap_point` relies on.
        """
        if self.min_cell is None or self.max_cell is None:
            return 0.0
        lat_extreme = max(
            abs(self.min_cell[0] * self.cell_deg),
            abs((self.max_cell[0] + 1) * self.cell_deg),
        )
        lat_extreme = min(89.9, lat_extreme)
        return METERS_PER_DEGREE * min(1.0, math.cos(math.radians(lat_extreme)))

    def ring_lower_bound_m(self, ring: int) -> float:
        """Lower bound on the distance from a point to any cell at this ring."""
        if ring <= 1:
            return 0.0
        return (ring - 1) * self.cell_deg * self.bound_scale_m_per_deg()


@dataclass(frozen=True)
class RoadGraph:
    nodes: dict[int, GraphNode]
    edges: dict[int, RoadEdge]
    adjacency: dict[int, tuple[int, ...]]
    grid: _GridIndex = field(repr=False, compare=False)
    skipped_ways: tuple[tuple[int, str], ...] = ()

    @property
    def max_speed_kph(self) -> float:
        return max((e.speed_kph for e in self.edges.values()), default=FALLBACK_SPEED_KPH)


def derive_speed_and_time(
    highway: str,
    maxspeed_tag: str | None,
    length_m: float,
    speed_table: dict[str, float] | None = None,
) -> tuple[float, float]:
    """Resolve edge speed (maxspeed tag if numeric, else class default) and time."""
    if length_m <= 0.0:
        raise GraphFormatError(f"length_m must be positive, got {length_m}")
    speed: float | None = None
    if maxspeed_tag is not None:
        try:
            parsed = float(maxspeed_tag)
            if parsed > 0.0:
                speed = parsed
        except ValueError:
            speed = None
    if speed is None:
        table = speed_table if speed_table is not None else DEFAULT_SPEEDS_KPH
        speed = table.get(highway)
        if speed is None:
            log.warning("unknown highway class %r; using fallback %s kph", highway, FALLBACK_SPEED_KPH)
            speed = FALLBACK_SPEED_KPH
    return speed, length_m / (speed * KPH_TO_MS)


@dataclass
class _EdgeSpec:
    osmid: int
    from_node: int
    to_node: int
    highway: str
    oneway: bool
    geometry: tuple[LatLon, ...]
    length_m: float
    speed_kph: float
    travel_time_s: float
    bridge: bool = False
    tunnel: bool = False
    junction: str | None = None
    lanes: int | None = None


def _build_graph(
    nodes: dict[int, GraphNode],
    specs: list[_EdgeSpec],
    skipped_ways: tuple[tuple[int, str], ...] = (),
) -> RoadGraph:
    """Expand specs into directed edges (two per two-way spec) and validate."""
    edges: dict[int, RoadEdge] = {}
    adjacency: dict[int, list[int]] = {n: [] for n in nodes}
    grid = _GridIndex()
    next_id = 0
    for spec in specs:
        directions = [(spec.from_node, spec.to_node, spec.geometry)]
        if not spec.oneway:
            directions.append((spec.to_node, spec.from_node, tuple(reversed(spec.geometry))))
        for from_node, to_node, geometry in directions:
            edge = RoadEdge(
                edge_id=next_id,
                osmid=spec.osmid,
                from_node=from_node,
                to_node=to_node,
                highway=spec.highway,
                oneway=spec.oneway,
                length_m=spec.length_m,
                speed_kph=spec.speed_kph,
                travel_time_s=spec.travel_time_s,
                bridge=spec.bridge,
                tunnel=spec.tunnel,
                junction=spec.junction,
                lanes=spec.lanes,
                geometry=geometry,
            )
            _validate_edge(edge, nodes)
            edges[next_id] = edge
            adjacency[from_node].append(next_id)
            grid.insert(next_id, geometry)
            next_id += 1
    return RoadGraph(
        nodes=nodes,
        edges=edges,
        adjacency={n: tuple(ids) for n, ids in adjacency.items()},
        grid=grid,
        skipped_ways=skipped_ways,
    )


def _validate_edge(edge: RoadEdge, nodes: dict[int, GraphNode]) -> None:
    if edge.from_node not in nodes or edge.to_node not in nodes:
        raise GraphFormatError(
            f"edge {edge.edge_id} references missing node "
            f"{edge.from_node if edge.from_node not in nodes else edge.to_node}"
        )
    if edge.length_m <= 0.0:
        raise GraphFormatError(f"edge {edge.edge_id}: length_m must be positive")
    if edge.speed_kph <= 0.0:
        raise GraphFormatError(f"edge {edge.edge_id}: speed_kph must be positive")
    if edge.travel_time_s <= 0.0:
        raise GraphFormatError(f"edge {edge.edge_id}: travel_time_s must be positive")
    expected = edge.length_m / (edge.speed_kph * KPH_TO_MS)
    if abs(edge.travel_time_s - expected) > TRAVEL_TIME_REL_TOL * max(expected, 1.0):
        raise GraphFormatError(
            f"edge {edge.edge_id}: travel_time_s {edge.travel_time_s} inconsistent "
            f"with length/speed (expected {expected})"
        )
    if len(edge.geometry) < 2:
        raise GraphFormatError(f"edge {edge.edge_id}: geometry needs at least 2 points")
    start, end = nodes[edge.from_node], nodes[edge.to_node]
    if edge.geometry[0] != (start.lat, start.lon) or edge.geometry[-1] != (end.lat, end.lon):
        raise GraphFormatError(f"edge {edge.edge_id}: geometry endpoints do not match nodes")


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(l) + 1 for l in lines[: line - 1]) + column


def _read_bytes(source: str | Path | bytes | IO[bytes] | IO[str]) -> bytes:
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    if isinstance(source, bytes):
        return source
    raw = source.read()
    return raw.encode("utf-8") if isinstance(raw, str) else raw


def _is_oneway(tags: dict[str, str]) -> bool:
    return tags.get("oneway", "").strip().lower() in {"yes", "true", "1"}


def parse_osm_xml(
    source: str | Path | bytes | IO[bytes] | IO[str],
    bbox: tuple[float, float, float, float] | None = None,
    speed_table: dict[str, float] | None = None,
) -> RoadGraph:
    """Build a road graph from an OSM XML extract.

    Only ways whose ``highway`` tag is in the routable set are kept. Each way
    is split into edges between consecutive retained nodes; a way referencing
    a node absent from the file is skipped and reported on
    ``RoadGraph.skipped_ways``. ``bbox`` is (min_lat, min_lon, max_lat,
    max_lon); nodes outside it are dropped before splitting.
    """
    data = _read_bytes(source)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(data, line, column)
        raise GraphFormatError(f"malformed OSM XML at byte offset {offset}: {exc}") from exc

    all_nodes: dict[int, GraphNode] = {}
    for element in root.iter("node"):
        node_id = int(element.attrib["id"])
        lat = float(element.attrib["lat"])
        lon = float(element.attrib["lon"])
        height = 0.0
        for tag in element.iter("tag"):
            if tag.attrib.get("k") == "ele":
                try:
                    height = float(tag.attrib.get("v", "0"))
                except ValueError:
                    height = 0.0
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            continue
        all_nodes[node_id] = GraphNode(node_id=node_id, lat=lat, lon=lon, height_m=height)

    def in_bbox(node: GraphNode) -> bool:
        if bbox is None:
            return True
        min_lat, min_lon, max_lat, max_lon = bbox
        return min_lat <= node.lat <= max_lat and min_lon <= node.lon <= max_lon

    specs: list[_EdgeSpec] = []
    skipped: list[tuple[int, str]] = []
    used_nodes: dict[int, GraphNode] = {}
    for way in root.iter("way"):
        way_id = int(way.attrib["id"])
        tags = {t.attrib["k"]: t.attrib.get("v", "") for t in way.iter("tag")}
        highway = tags.get("highway")
        if highway not in ROUTABLE_HIGHWAYS:
            continue
        refs = [int(nd.attrib["ref"]) for nd in way.iter("nd")]
        missing = [r for r in refs if r not in all_nodes]
        if missing:
            skipped.append((way_id, f"missing node {missing[0]}"))
            continue
        retained = [r for r in refs if in_bbox(all_nodes[r])]
        if len(retained) < 2:
            continue
        oneway = _is_oneway(tags)
        maxspeed = tags.get("maxspeed")
        lanes: int | None = None
        if "lanes" in tags:
            try:
                lanes = int(tags["lanes"])
            except ValueError:
                lanes = None
        for a, b in zip(retained, retained[1:]):
            if a == b:
                continue
            na, nb = all_nodes[a], all_nodes[b]
            geometry = ((na.lat, na.lon), (nb.lat, nb.lon))
            length = polyline_length_m(geometry)
            if length <= 0.0:
                continue
            speed, time_s = derive_speed_and_time(highway, maxspeed, length, speed_table)
            used_nodes[a] = na
            used_nodes[b] = nb
            specs.append(
                _EdgeSpec(
                    osmid=way_id,
                    from_node=a,
                    to_node=b,
                    highway=highway,
                    oneway=oneway,
                    geometry=geometry,
                    length_m=length,
                    speed_kph=speed,
                    travel_time_s=time_s,
                    bridge=tags.get("bridge", "").lower() in {"yes", "true", "1"},
                    tunnel=tags.get("tunnel", "").lower() in {"yes", "true", "1"},
                    junction=tags.get("junction") or None,
                    lanes=lanes,
                )
            )
    for way_id, reason in skipped:
        log.warning("skipping way %d: %s", way_id, reason)
    return _build_graph(used_nodes, specs, tuple(skipped))


def _parse_geometry(text: str) -> tuple[LatLon, ...]:
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        lat_text, lon_text = chunk.split()
        points.append((float(lat_text), float(lon_text)))
    return tuple(points)


def _format_geometry(polyline: tuple[LatLon, ...]) -> str:
    return ";".join(f"{repr(lat)} {repr(lon)}" for lat, lon in polyline)


def load_edges_csv(source: str | Path | bytes | IO[bytes] | IO[str]) -> RoadGraph:
    """Load a graph from the documented edge-list CSV format.

    Each row describes one way segment; rows without ``oneway=true`` expand
    into two directed edges. Dangling node references and invariant
    violations are fatal, with the offending row number in the message.
    """
    stream = _open_text(source)
    reader = csv.DictReader(stream)
    header = reader.fieldnames or []
    for column in EDGE_CSV_COLUMNS:
        if column not in header:
            raise GraphFormatError(f"edge CSV missing column {column!r}")

    nodes: dict[int, GraphNode] = {}
    specs: list[_EdgeSpec] = []
    for index, row in enumerate(reader, start=1):
        try:
            from_id = int(row["from_node"])
            to_id = int(row["to_node"])
            from_node = GraphNode(
                node_id=from_id,
                lat=float(row["from_lat"]),
                lon=float(row["from_lon"]),
                height_m=float(row["from_height_m"] or 0.0),
            )
            to_node = GraphNode(
                node_id=to_id,
                lat=float(row["to_lat"]),
                lon=float(row["to_lon"]),
                height_m=float(row["to_height_m"] or 0.0),
            )
            for node in (from_node, to_node):
                existing = nodes.get(node.node_id)
                if existing is not None and existing != node:
                    raise GraphFormatError(
                        f"row {index}: node {node.node_id} redefined with different coordinates"
                    )
                nodes[node.node_id] = node
            geometry = _parse_geometry(row["geometry"] or "")
            if not geometry:
                geometry = ((from_node.lat, from_node.lon), (to_node.lat, to_node.lon))
            lanes_text = (row["lanes"] or "").strip()
            spec = _EdgeSpec(
                osmid=int(row["osmid"]),
                from_node=from_id,
                to_node=to_id,
                highway=row["highway"],
                oneway=(row["oneway"] or "").strip().lower() in {"true", "yes", "1"},
                geometry=geometry,
                length_m=float(row["length_m"]),
                speed_kph=float(row["speed_kph"]),
                travel_time_s=float(row["travel_time_s"]),
                bridge=(row["bridge"] or "").strip().lower() in {"true", "yes", "1"},
                tunnel=(row["tunnel"] or "").strip().lower() in {"true", "yes", "1"},
                junction=(row["junction"] or "").strip() or None,
                lanes=int(lanes_text) if lanes_text else None,
            )
        except GraphFormatError:
            raise
        except (ValueError, KeyError) as exc:
            raise GraphFormatError(f"row {index}: unparseable edge row: {exc}") from exc
        if spec.length_m <= 0.0:
            raise GraphFormatError(f"row {index}: length_m must be positive")
        if spec.speed_kph <= 0.0:
            raise GraphFormatError(f"row {index}: speed_kph must be positive")
        if spec.travel_time_s <= 0.0:
            raise GraphFormatError(f"row {index}: travel_time_s must be positive")
        specs.append(spec)
    return _build_graph(nodes, specs)


def export_edges_csv(graph: RoadGraph, sink: IO[str]) -> None:
    """Write the graph in the edge-list CSV format (inverse of load_edges_csv).

    Directed edge pairs that came from a two-way segment are collapsed back
    into a single row; unpaired edges are written with ``oneway=true``.
    """
    writer = csv.writer(sink)
    writer.writerow(EDGE_CSV_COLUMNS)
    emitted: set[int] = set()
    for edge_id in sorted(graph.edges):
        if edge_id in emitted:
            continue
        edge = graph.edges[edge_id]
        emitted.add(edge_id)
        oneway = True
        if not edge.oneway:
            for other_id in sorted(graph.edges):
                if other_id in emitted:
                    continue
                other = graph.edges[other_id]
                if (
                    other.osmid == edge.osmid
                    and other.from_node == edge.to_node
                    and other.to_node == edge.from_node
                    and other.geometry == tuple(reversed(edge.geometry))
                    and other.length_m == edge.length_m
                    and other.speed_kph == edge.speed_kph
                ):
                    emitted.add(other_id)
                    oneway = False
                    break
        start = graph.nodes[edge.from_node]
        end = graph.nodes[edge.to_node]
        writer.writerow(
            [
                edge.from_node,
                edge.to_node,
                repr(start.lat),
                repr(start.lon),
                repr(start.height_m),
                repr(end.lat),
                repr(end.lon),
                repr(end.height_m),
                edge.osmid,
                edge.highway,
                "true" if oneway else "false",
                repr(edge.length_m),
                repr(edge.speed_kph),
                repr(edge.travel_time_s),
                "true" if edge.bridge else "false",
                "true" if edge.tunnel else "false",
                edge.junction or "",
                edge.lanes if edge.lanes is not None else "",
                _format_geometry(edge.geometry),
            ]
        )


def export_edges_csv_text(graph: RoadGraph) -> str:
    buffer = io.StringIO()
    export_edges_csv(graph, buffer)
    return buffer.getvalue()


def snap_point(
    graph: RoadGraph,
    p: LatLon,
    snap_radius_m: float = DEFAULT_SNAP_RADIUS_M,
) -> SnapResult | None:
    """Snap a point to the nearest edge within ``snap_radius_m``.

    Grid rings are expanded outward until the next ring provably cannot beat
    the best candidate (or the snap radius), which makes the result identical
    to a brute-force scan over every edge. Distance ties go to the lower edge
    id. Returns None when the nearest edge is farther than the radius.
    """
    if not graph.edges:
        raise GraphFormatError("cannot snap against an empty graph")
    grid = graph.grid
    center = grid._cell_of(p[0], p[1])
    cover = grid.cover_ring(center)

    best_dist = math.inf
    best_edge = -1
    best_fraction = 0.0
    seen: set[int] = set()
    ring = 0
    while ring <= cover:
        bound = grid.ring_lower_bound_m(ring)
        if bound > min(best_dist, snap_radius_m):
            break
        for cell in grid.ring_cells(center, ring):
            for edge_id in grid.cells.get(cell, ()):
                if edge_id in seen:
                    continue
                seen.add(edge_id)
                dist, fraction = point_polyline_distance_m(p, graph.edges[edge_id].geometry)
                if dist < best_dist or (dist == best_dist and edge_id < best_edge):
                    best_dist = dist
                    best_edge = edge_id
                    best_fraction = fraction
        ring += 1
    if best_edge < 0 or best_dist > snap_radius_m:
        return None
    return SnapResult(edge_id=best_edge, distance_m=best_dist, offset_fraction=best_fraction)


def snap_point_bruteforce(
    graph: RoadGraph,
    p: LatLon,
    snap_radius_m: float = DEFAULT_SNAP_RADIUS_M,
) -> SnapResult | None:
    """Reference implementation scanning every edge; used to verify the grid."""
    if not graph.edges:
        raise GraphFormatError("cannot snap against an empty graph")
    best: SnapResult | None = None
    for edge_id in sorted(graph.edges):
        dist, fraction = point_polyline_distance_m(p, graph.edges[edge_id].geometry)
        if best is None or dist < best.distance_m:
            best = SnapResult(edge_id=edge_id, distance_m=dist, offset_fraction=fraction)
    if best is None or best.distance_m > snap_radius_m:
        return None
    return best


def nearest_node(graph: RoadGraph, p: LatLon, snap_radius_m: float = DEFAULT_SNAP_RADIUS_M) -> int | None:
    """Nearest routable node: snap to an edge, then pick its closer endpoint."""
    snapped = snap_point(graph, p, snap_radius_m)
    if snapped is None:
        return None
    edge = graph.edges[snapped.edge_id]
    start = graph.nodes[edge.from_node]
    end = graph.nodes[edge.to_node]
    d_start = haversine_m(p, (start.lat, start.lon))
    d_end = haversine_m(p, (end.lat, end.lon))
    if d_start < d_end or (d_start == d_end and edge.from_node <= edge.to_node):
        return edge.from_node
    return edge.to_node
