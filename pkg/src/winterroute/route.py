"""Safest-path planning over a conditioned road graph.

The edge cost blends travel time with per-edge risk:
``cost = travel_time_s * (1 + alpha * risk / r_ref)`` where ``r_ref`` is the
risk of a dry road at maximum friction under the active tables. ``alpha = 0``
is exactly the fastest route; growing ``alpha`` trades time for safety while
every cost stays positive, so Dijkstra's preconditions always hold.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Mapping, NamedTuple

from .geo import haversine_m
from .ingest import FRICTION_MAX, RoadState
from .roadgraph import RoadEdge, RoadGraph
from .safety import EdgeCondition, RateTables, safety_metric


class UnknownNodeError(ValueError):
    """A requested endpoint node id does not exist in the graph."""


@dataclass(frozen=True)
class CostParams:
    alpha: float
    r_ref: float

    def __post_init__(self) -> None:
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")
        if self.r_ref <= 0.0:
            raise ValueError("r_ref must be positive")

    @classmethod
    def for_tables(cls, alpha: float, tables: RateTables) -> "CostParams":
        return cls(alpha=alpha, r_ref=safety_metric(FRICTION_MAX, RoadState.DRY, tables))


class PerEdge(NamedTuple):
    edge_id: int
    state: RoadState
    risk: float


@dataclass(frozen=True)
class Route:
    node_seq: tuple[int, ...]
    edge_seq: tuple[int, ...]
    total_cost: float
    total_time_s: float
    total_distance_m: float
    risk_sum: float
    per_edge: tuple[PerEdge, ...]


class SearchStats(NamedTuple):
    expanded: int


def edge_cost(
    edge: RoadEdge,
    cond: EdgeCondition,
    params: CostParams,
    tables: RateTables,
) -> float:
    risk = safety_metric(cond.friction_est, cond.state_est, tables)
    return edge.travel_time_s * (1.0 + params.alpha * risk / params.r_ref)


def _check_endpoints(graph: RoadGraph, src: int, dst: int) -> None:
    if src not in graph.nodes:
        raise UnknownNodeError(f"unknown source node {src}")
    if dst not in graph.nodes:
        raise UnknownNodeError(f"unknown destination node {dst}")


def _empty_route(src: int) -> Route:
    return Route(
        node_seq=(src,),
        edge_seq=(),
        total_cost=0.0,
        total_time_s=0.0,
        total_distance_m=0.0,
        risk_sum=0.0,
        per_edge=(),
    )


def _reconstruct(
    graph: RoadGraph,
    conditions: Mapping[int, EdgeCondition],
    tables: RateTables,
    pred_edge: dict[int, int],
    src: int,
    dst: int,
    total_cost: float,
) -> Route:
    edge_ids: list[int] = []
    node = dst
    while node != src:
        eid = pred_edge[node]
        edge_ids.append(eid)
        node = graph.edges[eid].from_node
    edge_ids.reverse()

    node_seq = [src] + [graph.edges[eid].to_node for eid in edge_ids]
    total_time = 0.0
    total_distance = 0.0
    risk_sum = 0.0
    per_edge: list[PerEdge] = []
    for eid in edge_ids:
        edge = graph.edges[eid]
        cond = conditions[eid]
        risk = safety_metric(cond.friction_est, cond.state_est, tables)
        total_time += edge.travel_time_s
        total_distance += edge.length_m
        risk_sum += risk * edge.travel_time_s
        per_edge.append(PerEdge(edge_id=eid, state=cond.state_est, risk=risk))
    return Route(
        node_seq=tuple(node_seq),
        edge_seq=tuple(edge_ids),
        total_cost=total_cost,
        total_time_s=total_time,
        total_distance_m=total_distance,
        risk_sum=risk_sum,
        per_edge=tuple(per_edge),
    )


def shortest_path_detailed(
    graph: RoadGraph,
    conditions: Mapping[int, EdgeCondition],
    src: int,
    dst: int,
    params: CostParams,
    tables: RateTables,
) -> tuple[Route | None, SearchStats]:
    """Dijkstra with a binary heap; returns (route, expansion stats).

    Deterministic: among equal-cost relaxations the predecessor edge with the
    lower edge id wins. Unreachable destinations yield ``(None, stats)``
    rather than an error.
    """
    _check_endpoints(graph, src, dst)
    if src == dst:
        return _empty_route(src), SearchStats(expanded=0)

    dist: dict[int, float] = {src: 0.0}
    pred_edge: dict[int, int] = {}
    closed: set[int] = set()
    heap: list[tuple[float, int]] = [(0.0, src)]
    expanded = 0
    while heap:
        d, node = heapq.heappop(heap)
        if node in closed or d > dist[node]:
            continue
        closed.add(node)
        expanded += 1
        if node == dst:
            return (
                _reconstruct(graph, conditions, tables, pred_edge, src, dst, d),
                SearchStats(expanded=expanded),
            )
        for eid in graph.adjacency.get(node, ()):
            edge = graph.edges[eid]
            neighbor = edge.to_node
            if neighbor in closed:
                continue
            candidate = d + edge_cost(edge, conditions[eid], params, tables)
            current = dist.get(neighbor)
            if current is None or candidate < current:
                dist[neighbor] = candidate
                pred_edge[neighbor] = eid
                heapq.heappush(heap, (candidate, neighbor))
            elif candidate == current and eid < pred_edge[neighbor]:
                pred_edge[neighbor] = eid
    return None, SearchStats(expanded=expanded)


def shortest_path(
    graph: RoadGraph,
    conditions: Mapping[int, EdgeCondition],
    src: int,
    dst: int,
    params: CostParams,
    tables: RateTables,
) -> Route | None:
    route, _stats = shortest_path_detailed(graph, conditions, src, dst, params, tables)
    return route


def _heuristic_speed_ms(graph: RoadGraph) -> float:
    """Admissible straight-line speed: no edge covers its endpoint separation faster."""
    best = graph.max_speed_kph / 3.6
    for edge in graph.edges.values():
        start = graph.nodes[edge.from_node]
        end = graph.nodes[edge.to_node]
        straight = haversine_m((start.lat, start.lon), (end.lat, end.lon))
        if straight > 0.0 and edge.travel_time_s > 0.0:
            best = max(best, straight / edge.travel_time_s)
    return best


def shortest_path_astar_detailed(
    graph: RoadGraph,
    conditions: Mapping[int, EdgeCondition],
    src: int,
    dst: int,
    params: CostParams,
    tables: RateTables,
) -> tuple[Route | None, SearchStats]:
    """A* with h(n) = great-circle distance to dst over the graph's top speed.

    The heuristic never overestimates (edge cost >= travel time >= straight
    line distance at the fastest straight-line speed in the graph) and is
    consistent, so total cost always matches Dijkstra's.
    """
    _check_endpoints(graph, src, dst)
    if src == dst:
        return _empty_route(src), SearchStats(expanded=0)

    v_max = _heuristic_speed_ms(graph)
    target = graph.nodes[dst]
    h_cache: dict[int, float] = {}

    def h(node_id: int) -> float:
        cached = h_cache.get(node_id)
        if cached is None:
            node = graph.nodes[node_id]
            cached = haversine_m((node.lat, node.lon), (target.lat, target.lon)) / v_max
            h_cache[node_id] = cached
        return cached

    g: dict[int, float] = {src: 0.0}
    pred_edge: dict[int, int] = {}
    closed: set[int] = set()
    heap: list[tuple[float, int]] = [(h(src), src)]
    expanded = 0
    while heap:
        _f, node = heapq.heappop(heap)
        if node in closed:
            continue
        closed.add(node)
        expanded += 1
        if node == dst:
            return (
                _reconstruct(graph, conditions, tables, pred_edge, src, dst, g[node]),
                SearchStats(expanded=expanded),
            )
        for eid in graph.adjacency.get(node, ()):
            edge = graph.edges[eid]
            neighbor = edge.to_node
            if neighbor in closed:
                continue
            candidate = g[node] + edge_cost(edge, conditions[eid], params, tables)
            current = g.get(neighbor)
            if current is None or candidate < current:
                g[neighbor] = candidate
                pred_edge[neighbor] = eid
                heapq.heappush(heap, (candidate + h(neighbor), neighbor))
            elif candidate == current and eid < pred_edge[neighbor]:
                pred_edge[neighbor] = eid
    return None, SearchStats(expanded=expanded)


def shortest_path_astar(
    graph: RoadGraph,
    conditions: Mapping[int, EdgeCondition],
    src: int,
    dst: int,
    params: CostParams,
    tables: RateTables,
) -> Route | None:
    route, _stats = shortest_path_astar_detailed(graph, conditions, src, dst, params, tables)
    return route


def compare_routes(
    graph: RoadGraph,
    conditions: Mapping[int, EdgeCondition],
    src: int,
    dst: int,
    alphas: list[float],
    tables: RateTables,
) -> list[tuple[float, Route | None]]:
    """One optimal route per alpha; total time never decreases as alpha grows."""
    if not alphas:
        raise ValueError("alphas must not be empty")
    results: list[tuple[float, Route | None]] = []
    for alpha in alphas:
        params = CostParams.for_tables(alpha, tables)
        results.append((alpha, shortest_path(graph, conditions, src, dst, params, tables)))
    return results


def route_is_connected(graph: RoadGraph, route: Route) -> bool:
    """Consecutive edges must chain; used by tests and sanity checks."""
    for first, second in zip(route.edge_seq, route.edge_seq[1:]):
        if graph.edges[first].to_node != graph.edges[second].from_node:
            return False
    if route.edge_seq:
        if graph.edges[route.edge_seq[0]].from_node != route.node_seq[0]:
            return False
        if graph.edges[route.edge_seq[-1]].to_node != route.node_seq[-1]:
            return False
    return True
