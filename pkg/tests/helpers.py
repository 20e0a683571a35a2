"""Shared fixture builders and independent oracles for the test suite."""

from __future__ import annotations

import io
import math
import random

from winterroute.geo import haversine_m
from winterroute.ingest import RoadState
from winterroute.roadgraph import EDGE_CSV_COLUMNS, RoadGraph, load_edges_csv
from winterroute.safety import EdgeCondition, RateTables, load_rate_tables
from winterroute.route import CostParams, edge_cost

SAMPLE_TABLES_DOC = {
    "exposure_unit": "accidents per million vehicle km",
    "friction_breakpoints": [0.1, 0.15, 0.25, 0.35, 0.81],
    "friction_rates": [0.8, 0.55, 0.25, 0.2],
    "state_rates": {
        "Dry": 1.0,
        "Moist": 1.5,
        "Wet": 2.0,
        "Snowy": 3.0,
        "Slushy": 3.5,
        "Icy": 4.0,
    },
}


def sample_tables() -> RateTables:
    return load_rate_tables(dict(SAMPLE_TABLES_DOC))


def edge_row(
    from_node: int,
    to_node: int,
    from_coord: tuple[float, float],
    to_coord: tuple[float, float],
    *,
    oneway: bool = False,
    travel_time_s: float | None = None,
    speed_kph: float | None = None,
    highway: str = "residential",
    osmid: int = 0,
) -> dict[str, str]:
    """One edge-CSV row; speed/time are made mutually consistent."""
    length = haversine_m(from_coord, to_coord)
    assert length > 0.0, "edge endpoints must be distinct"
    if travel_time_s is not None:
        speed = length * 3.6 / travel_time_s
        time_s = length / (speed / 3.6)
    else:
        speed = speed_kph if speed_kph is not None else 30.0
        time_s = length / (speed / 3.6)
    return {
        "from_node": str(from_node),
        "to_node": str(to_node),
        "from_lat": repr(from_coord[0]),
        "from_lon": repr(from_coord[1]),
        "from_height_m": "0.0",
        "to_lat": repr(to_coord[0]),
        "to_lon": repr(to_coord[1]),
        "to_height_m": "0.0",
        "osmid": str(osmid),
        "highway": highway,
        "oneway": "true" if oneway else "false",
        "length_m": repr(length),
        "speed_kph": repr(speed),
        "travel_time_s": repr(time_s),
        "bridge": "false",
        "tunnel": "false",
        "junction": "",
        "lanes": "",
        "geometry": "",
    }


def edges_csv_text(rows: list[dict[str, str]]) -> str:
    buffer = io.StringIO()
    buffer.write(",".join(EDGE_CSV_COLUMNS) + "\n")
    for row in rows:
        buffer.write(",".join(row[c] for c in EDGE_CSV_COLUMNS) + "\n")
    return buffer.getvalue()


def graph_from_rows(rows: list[dict[str, str]]) -> RoadGraph:
    return load_edges_csv(edges_csv_text(rows).encode("utf-8"))


def uniform_conditions(
    graph: RoadGraph,
    friction: float = 0.8,
    state: RoadState = RoadState.DRY,
) -> dict[int, EdgeCondition]:
    return {
        eid: EdgeCondition(eid, friction, state, "default") for eid in graph.edges
    }


def triangle_graph() -> RoadGraph:
    """Three nodes around Narvik, all edges two-way: 3 rows, 6 directed edges."""
    a = (68.4300, 17.4200)
    b = (68.4380, 17.4300)
    c = (68.4320, 17.4450)
    return graph_from_rows(
        [
            edge_row(1, 2, a, b, osmid=11),
            edge_row(2, 3, b, c, osmid=12),
            edge_row(1, 3, a, c, osmid=13),
        ]
    )


def icy_detour_fixture() -> tuple[RoadGraph, dict[int, EdgeCondition], int, int]:
    """Short icy edge A->B versus a longer dry detour A->C->B.

    With the sample tables, alpha=0 picks the icy edge and alpha=5 picks the
    detour (cost order flips between 10 s * (1 + 16a) and 60 s * (1 + a)).
    """
    a = (69.0000, 17.0000)
    b = (69.0010, 17.0000)  # ~111 m north
    c = (69.0005, 17.0040)
    rows = [
        edge_row(1, 2, a, b, travel_time_s=10.0, osmid=1),
        edge_row(1, 3, a, c, travel_time_s=30.0, osmid=2),
        edge_row(3, 2, c, b, travel_time_s=30.0, osmid=3),
    ]
    graph = graph_from_rows(rows)
    conditions: dict[int, EdgeCondition] = {}
    for eid, edge in graph.edges.items():
        if {edge.from_node, edge.to_node} == {1, 2}:
            conditions[eid] = EdgeCondition(eid, 0.12, RoadState.ICY, "measured")
        else:
            conditions[eid] = EdgeCondition(eid, 0.8, RoadState.DRY, "measured")
    return graph, conditions, 1, 2


def random_directed_graph(
    rng: random.Random,
    n_nodes: int,
    edge_prob: float = 0.45,
) -> RoadGraph:
    """Random directed graph with strictly positive random travel times."""
    coords: list[tuple[float, float]] = []
    while len(coords) < n_nodes:
        candidate = (
            69.0 + rng.random() * 0.08,
            17.0 + rng.random() * 0.08,
        )
        if all(haversine_m(candidate, c) > 5.0 for c in coords):
            coords.append(candidate)
    rows = []
    osmid = 0
    for i in range(n_nodes):
        for j in range(n_nodes):
            if i == j or rng.random() > edge_prob:
                continue
            osmid += 1
            rows.append(
                edge_row(
                    i + 1,
                    j + 1,
                    coords[i],
                    coords[j],
                    oneway=True,
                    travel_time_s=rng.uniform(1.0, 10.0),
                    osmid=osmid,
                )
            )
    if not rows:
        rows.append(edge_row(1, 2, coords[0], coords[1], oneway=True, travel_time_s=1.0, osmid=1))
    return graph_from_rows(rows)


def random_geometric_graph(rng: random.Random, n_nodes: int, k_neighbors: int = 4) -> RoadGraph:
    """Two-way k-nearest-neighbor geometric graph, the A* benchmark shape."""
    coords: list[tuple[float, float]] = []
    while len(coords) < n_nodes:
        candidate = (
            69.0 + rng.random() * 0.2,
            17.0 + rng.random() * 0.4,
        )
        if all(haversine_m(candidate, c) > 1.0 for c in coords):
            coords.append(candidate)
    seen_pairs: set[tuple[int, int]] = set()
    rows = []
    osmid = 0
    for i, origin in enumerate(coords):
        by_distance = sorted(
            (j for j in range(n_nodes) if j != i),
            key=lambda j: haversine_m(origin, coords[j]),
        )
        for j in by_distance[:k_neighbors]:
            pair = (min(i, j), max(i, j))
            if pair in seen_pairs:
                continue
            seen_pairs.add(pair)
            osmid += 1
            rows.append(
                edge_row(
                    i + 1,
                    j + 1,
                    coords[i],
                    coords[j],
                    speed_kph=rng.choice([30.0, 50.0, 60.0, 80.0]),
                    osmid=osmid,
                )
            )
    return graph_from_rows(rows)


def jittered_grid_graph(
    rng: random.Random,
    n_rows: int,
    n_cols: int,
    spacing_deg: float = 0.004,
) -> RoadGraph:
    """Two-way jittered street grid; O(n) to build, used for the A* benchmark."""
    coords: dict[tuple[int, int], tuple[float, float]] = {}
    node_ids: dict[tuple[int, int], int] = {}
    nid = 0
    for r in range(n_rows):
        for c in range(n_cols):
            nid += 1
            node_ids[(r, c)] = nid
            coords[(r, c)] = (
                69.0 + r * spacing_deg + rng.uniform(-0.001, 0.001),
                17.0 + c * spacing_deg + rng.uniform(-0.001, 0.001),
            )
    rows = []
    osmid = 0
    for r in range(n_rows):
        for c in range(n_cols):
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr >= n_rows or cc >= n_cols:
                    continue
                osmid += 1
                rows.append(
                    edge_row(
                        node_ids[(r, c)],
                        node_ids[(rr, cc)],
                        coords[(r, c)],
                        coords[(rr, cc)],
                        speed_kph=rng.choice([30.0, 50.0, 70.0]),
                        osmid=osmid,
                    )
                )
    return graph_from_rows(rows)


def random_conditions(rng: random.Random, graph: RoadGraph) -> dict[int, EdgeCondition]:
    states = list(RoadState)
    return {
        eid: EdgeCondition(
            eid,
            round(rng.uniform(0.1, 0.81), 3),
            rng.choice(states),
            "measured",
        )
        for eid in graph.edges
    }


def enumerate_best_cost(
    graph: RoadGraph,
    conditions: dict[int, EdgeCondition],
    params: CostParams,
    tables: RateTables,
    src: int,
    dst: int,
) -> float | None:
    """Exhaustive simple-path enumeration; costs accumulate along the path."""
    best: float | None = None

    def visit(node: int, cost: float, seen: frozenset[int]) -> None:
        nonlocal best
        if node == dst:
            if best is None or cost < best:
                best = cost
            return
        for eid in graph.adjacency.get(node, ()):
            edge = graph.edges[eid]
            if edge.to_node in seen:
                continue
            visit(
                edge.to_node,
                cost + edge_cost(edge, conditions[eid], params, tables),
                seen | {edge.to_node},
            )

    if src == dst:
        return 0.0
    visit(src, 0.0, frozenset({src}))
    return best
