import math
import random

import pytest

from winterroute.ingest import RoadState
from winterroute.roadgraph import RoadEdge
from winterroute.route import (
    CostParams,
    UnknownNodeError,
    compare_routes,
    edge_cost,
    route_is_connected,
    shortest_path,
    shortest_path_astar,
    shortest_path_astar_detailed,
    shortest_path_detailed,
)
from winterroute.safety import EdgeCondition

from helpers import (
    edge_row,
    enumerate_best_cost,
    graph_from_rows,
    icy_detour_fixture,
    random_conditions,
    random_directed_graph,
    random_geometric_graph,
    sample_tables,
    triangle_graph,
    uniform_conditions,
)


@pytest.fixture
def tables():
    return sample_tables()


def dummy_edge(travel_time_s: float) -> RoadEdge:
    return RoadEdge(
        edge_id=0,
        osmid=0,
        from_node=1,
        to_node=2,
        highway="residential",
        oneway=True,
        length_m=100.0,
        speed_kph=100.0 * 3.6 / travel_time_s,
        travel_time_s=travel_time_s,
        geometry=((69.0, 17.0), (69.0, 17.001)),
    )


class TestEdgeCost:
    def test_risk_equal_to_reference_doubles_time(self, tables):
        # risk == r_ref with alpha 1: cost = t * (1 + 1) = 2t.
        params = CostParams.for_tables(1.0, tables)
        cond = EdgeCondition(0, 0.81, RoadState.DRY, "default")
        assert edge_cost(dummy_edge(10.0), cond, params, tables) == pytest.approx(20.0)

    def test_alpha_zero_is_travel_time(self, tables):
        params = CostParams.for_tables(0.0, tables)
        cond = EdgeCondition(0, 0.12, RoadState.ICY, "measured")
        assert edge_cost(dummy_edge(10.0), cond, params, tables) == 10.0

    def test_formula_arithmetic(self, tables):
        # time 12, risk 0.5, r_ref 0.2, alpha 2 -> 12 * (1 + 2*2.5) = 72.
        params = CostParams(alpha=2.0, r_ref=0.2)
        cond = EdgeCondition(0, 0.30, RoadState.WET, "measured")  # risk 0.25*2.0 = 0.5
        assert edge_cost(dummy_edge(12.0), cond, params, tables) == pytest.approx(72.0)

    def test_always_positive(self, tables):
        rng = random.Random(1)
        params = CostParams.for_tables(7.0, tables)
        for _ in range(100):
            cond = EdgeCondition(
                0, rng.uniform(0.1, 0.81), rng.choice(list(RoadState)), "measured"
            )
            assert edge_cost(dummy_edge(rng.uniform(0.1, 100.0)), cond, params, tables) > 0.0

    def test_params_validation(self, tables):
        with pytest.raises(ValueError):
            CostParams(alpha=-1.0, r_ref=0.2)
        with pytest.raises(ValueError):
            CostParams(alpha=0.0, r_ref=0.0)
        assert CostParams.for_tables(0.0, tables).r_ref == pytest.approx(0.2)


class TestShortestPath:
    def test_triangle_two_hops_beat_direct(self, tables):
        # A->B (1s), B->C (1s), A->C (3s) as one-way timed edges.
        a, b, c = (69.0, 17.0), (69.001, 17.0), (69.001, 17.002)
        graph = graph_from_rows(
            [
                edge_row(1, 2, a, b, oneway=True, travel_time_s=1.0, osmid=1),
                edge_row(2, 3, b, c, oneway=True, travel_time_s=1.0, osmid=2),
                edge_row(1, 3, a, c, oneway=True, travel_time_s=3.0, osmid=3),
            ]
        )
        conditions = uniform_conditions(graph)
        params = CostParams.for_tables(0.0, tables)
        route = shortest_path(graph, conditions, 1, 3, params, tables)
        assert route.node_seq == (1, 2, 3)
        assert route.total_cost == pytest.approx(2.0)
        best = enumerate_best_cost(graph, conditions, params, tables, 1, 3)
        assert route.total_cost == best

    def test_src_equals_dst(self, tables):
        graph = triangle_graph()
        params = CostParams.for_tables(1.0, tables)
        route = shortest_path(graph, uniform_conditions(graph), 1, 1, params, tables)
        assert route.node_seq == (1,)
        assert route.edge_seq == ()
        assert route.total_cost == 0.0
        assert route.total_time_s == 0.0

    def test_unreachable_returns_none(self, tables):
        a, b, c, d = (69.0, 17.0), (69.001, 17.0), (69.01, 17.01), (69.011, 17.01)
        graph = graph_from_rows(
            [
                edge_row(1, 2, a, b, oneway=True, travel_time_s=1.0),
                edge_row(3, 4, c, d, oneway=True, travel_time_s=1.0),
            ]
        )
        params = CostParams.for_tables(0.0, tables)
        assert shortest_path(graph, uniform_conditions(graph), 1, 4, params, tables) is None

    def test_unknown_node_raises(self, tables):
        graph = triangle_graph()
        params = CostParams.for_tables(0.0, tables)
        with pytest.raises(UnknownNodeError):
            shortest_path(graph, uniform_conditions(graph), 1, 999, params, tables)
        with pytest.raises(UnknownNodeError):
            shortest_path(graph, uniform_conditions(graph), 999, 1, params, tables)

    def test_route_totals_are_edge_sums(self, tables):
        graph, conditions, src, dst = icy_detour_fixture()
        params = CostParams.for_tables(2.0, tables)
        route = shortest_path(graph, conditions, src, dst, params, tables)
        assert route_is_connected(graph, route)
        time_sum = sum(graph.edges[eid].travel_time_s for eid in route.edge_seq)
        dist_sum = sum(graph.edges[eid].length_m for eid in route.edge_seq)
        risk_sum = sum(
            p.risk * graph.edges[p.edge_id].travel_time_s for p in route.per_edge
        )
        assert math.isclose(route.total_time_s, time_sum, rel_tol=1e-9)
        assert math.isclose(route.total_distance_m, dist_sum, rel_tol=1e-9)
        assert math.isclose(route.risk_sum, risk_sum, rel_tol=1e-9)

    @pytest.mark.parametrize("alpha", [0.0, 1.5])
    def test_optimal_on_random_graphs(self, tables, alpha):
        rng = random.Random(42 if alpha == 0.0 else 43)
        params = CostParams.for_tables(alpha, tables)
        for _ in range(40):
            n = rng.randint(2, 8)
            graph = random_directed_graph(rng, n)
            conditions = random_conditions(rng, graph)
            node_ids = sorted(graph.nodes)
            src = rng.choice(node_ids)
            dst = rng.choice(node_ids)
            route = shortest_path(graph, conditions, src, dst, params, tables)
            best = enumerate_best_cost(graph, conditions, params, tables, src, dst)
            if best is None:
                assert route is None
            else:
                assert route is not None
                assert route.total_cost == best

    def test_risk_increase_never_cheapens_route(self, tables):
        rng = random.Random(7)
        params = CostParams.for_tables(3.0, tables)
        for _ in range(20):
            graph = random_directed_graph(rng, 6)
            conditions = random_conditions(rng, graph)
            node_ids = sorted(graph.nodes)
            src, dst = node_ids[0], node_ids[-1]
            before = shortest_path(graph, conditions, src, dst, params, tables)
            if before is None:
                continue
            victim = rng.choice(list(graph.edges))
            bumped = dict(conditions)
            bumped[victim] = EdgeCondition(victim, 0.1, RoadState.ICY, "measured")
            after = shortest_path(graph, bumped, src, dst, params, tables)
            assert after is not None
            assert after.total_cost >= before.total_cost - 1e-12


class TestAStar:
    def test_matches_dijkstra_on_fixtures(self, tables):
        graph, conditions, src, dst = icy_detour_fixture()
        for alpha in (0.0, 1.0, 5.0):
            params = CostParams.for_tables(alpha, tables)
            a = shortest_path(graph, conditions, src, dst, params, tables)
            b = shortest_path_astar(graph, conditions, src, dst, params, tables)
            assert math.isclose(a.total_cost, b.total_cost, rel_tol=1e-9)

    def test_heuristic_zero_at_destination(self, tables):
        graph = triangle_graph()
        params = CostParams.for_tables(0.0, tables)
        route, stats = shortest_path_astar_detailed(
            graph, uniform_conditions(graph), 2, 2, params, tables
        )
        assert route.total_cost == 0.0
        assert stats.expanded == 0

    def test_expands_no_more_than_dijkstra(self, tables):
        rng = random.Random(3)
        graph = random_geometric_graph(rng, 120)
        conditions = random_conditions(rng, graph)
        params = CostParams.for_tables(1.0, tables)
        checked = 0
        for _ in range(10):
            src = rng.randint(1, 120)
            dst = rng.randint(1, 120)
            dijkstra_route, dijkstra_stats = shortest_path_detailed(
                graph, conditions, src, dst, params, tables
            )
            astar_route, astar_stats = shortest_path_astar_detailed(
                graph, conditions, src, dst, params, tables
            )
            if dijkstra_route is None:
                assert astar_route is None
                continue
            checked += 1
            assert math.isclose(
                astar_route.total_cost, dijkstra_route.total_cost, rel_tol=1e-9
            )
            assert astar_stats.expanded <= dijkstra_stats.expanded
        assert checked > 0

    def test_unreachable_matches(self, tables):
        a, b, c, d = (69.0, 17.0), (69.001, 17.0), (69.01, 17.01), (69.011, 17.01)
        graph = graph_from_rows(
            [
                edge_row(1, 2, a, b, oneway=True, travel_time_s=1.0),
                edge_row(3, 4, c, d, oneway=True, travel_time_s=1.0),
            ]
        )
        params = CostParams.for_tables(0.0, tables)
        assert shortest_path_astar(graph, uniform_conditions(graph), 1, 4, params, tables) is None


class TestCompareRoutes:
    def test_alpha_zero_is_fastest(self, tables):
        graph, conditions, src, dst = icy_detour_fixture()
        [(_, route)] = compare_routes(graph, conditions, src, dst, [0.0], tables)
        fastest = shortest_path(
            graph, conditions, src, dst, CostParams.for_tables(0.0, tables), tables
        )
        assert route.edge_seq == fastest.edge_seq
        assert route.total_time_s == fastest.total_time_s

    def test_icy_edge_avoided_at_alpha_five(self, tables):
        graph, conditions, src, dst = icy_detour_fixture()
        results = dict(compare_routes(graph, conditions, src, dst, [0.0, 5.0], tables))
        icy_edges = {
            eid for eid, c in conditions.items() if c.state_est is RoadState.ICY
        }
        assert set(results[0.0].edge_seq) & icy_edges
        assert not set(results[5.0].edge_seq) & icy_edges
        # Verified against exhaustive enumeration for both alphas.
        for alpha, route in results.items():
            best = enumerate_best_cost(
                graph, conditions, CostParams.for_tables(alpha, tables), tables, src, dst
            )
            assert route.total_cost == best

    def test_total_time_nondecreasing_in_alpha(self, tables):
        graph, conditions, src, dst = icy_detour_fixture()
        alphas = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]
        results = compare_routes(graph, conditions, src, dst, alphas, tables)
        times = [route.total_time_s for _, route in results]
        assert times == sorted(times)

    def test_repeated_alpha_identical(self, tables):
        graph, conditions, src, dst = icy_detour_fixture()
        results = compare_routes(graph, conditions, src, dst, [1.0, 1.0], tables)
        assert results[0][1] == results[1][1]

    def test_empty_alphas_rejected(self, tables):
        graph, conditions, src, dst = icy_detour_fixture()
        with pytest.raises(ValueError):
            compare_routes(graph, conditions, src, dst, [], tables)
