import io
import logging
import math
import random

import pytest

from winterroute.geo import METERS_PER_DEGREE, haversine_m
from winterroute.roadgraph import (
    GraphFormatError,
    derive_speed_and_time,
    export_edges_csv_text,
    load_edges_csv,
    nearest_node,
    parse_osm_xml,
    snap_point,
    snap_point_bruteforce,
)

from helpers import edge_row, edges_csv_text, graph_from_rows, triangle_graph


def osm_doc(body: str) -> bytes:
    return f'<?xml version="1.0"?>\n<osm version="0.6">\n{body}\n</osm>'.encode()


TWO_NODE_WAY = """
<node id="1" lat="69.0" lon="17.0"/>
<node id="2" lat="69.0" lon="17.00250949229"/>
<way id="100">
  <nd ref="1"/>
  <nd ref="2"/>
  <tag k="highway" v="residential"/>
</way>
"""


class TestParseOsmXml:
    def test_two_way_residential(self):
        # Node separation chosen so the edge is ~100 m long: the haversine of
        # 0.0025405 deg of longitude at lat 69 is 100.0 m (+-0.05).
        graph = parse_osm_xml(osm_doc(TWO_NODE_WAY))
        assert len(graph.nodes) == 2
        assert len(graph.edges) == 2
        expected = haversine_m((69.0, 17.0), (69.0, 17.00250949229))
        assert expected == pytest.approx(100.0, abs=0.1)
        for edge in graph.edges.values():
            assert edge.length_m == pytest.approx(expected)
            assert edge.highway == "residential"
            assert edge.speed_kph == 30.0

    def test_oneway_produces_single_edge(self):
        body = TWO_NODE_WAY.replace(
            '<tag k="highway" v="residential"/>',
            '<tag k="highway" v="residential"/>\n<tag k="oneway" v="yes"/>',
        )
        graph = parse_osm_xml(osm_doc(body))
        assert len(graph.edges) == 1
        (edge,) = graph.edges.values()
        assert edge.from_node == 1 and edge.to_node == 2

    def test_footway_ignored(self):
        body = TWO_NODE_WAY.replace('v="residential"', 'v="footway"')
        graph = parse_osm_xml(osm_doc(body))
        assert len(graph.edges) == 0

    def test_maxspeed_numeric_overrides_default(self):
        body = TWO_NODE_WAY.replace(
            '<tag k="highway" v="residential"/>',
            '<tag k="highway" v="residential"/>\n<tag k="maxspeed" v="50"/>',
        )
        graph = parse_osm_xml(osm_doc(body))
        for edge in graph.edges.values():
            assert edge.speed_kph == 50.0

    def test_missing_node_skips_way(self):
        body = TWO_NODE_WAY.replace('<nd ref="2"/>', '<nd ref="2"/><nd ref="99"/>')
        graph = parse_osm_xml(osm_doc(body))
        assert len(graph.edges) == 0
        assert graph.skipped_ways == ((100, "missing node 99"),)

    def test_malformed_xml_reports_byte_offset(self):
        with pytest.raises(GraphFormatError, match="byte offset"):
            parse_osm_xml(b"<osm><node id=1></osm>")

    def test_bbox_drops_outside_nodes(self):
        body = """
        <node id="1" lat="69.0" lon="17.0"/>
        <node id="2" lat="69.001" lon="17.0"/>
        <node id="3" lat="72.0" lon="17.0"/>
        <way id="100">
          <nd ref="1"/>
          <nd ref="2"/>
          <nd ref="3"/>
          <tag k="highway" v="residential"/>
        </way>
        """
        graph = parse_osm_xml(osm_doc(body), bbox=(68.9, 16.9, 69.1, 17.1))
        assert set(graph.nodes) == {1, 2}
        assert len(graph.edges) == 2

    def test_elevation_tag_read(self):
        body = TWO_NODE_WAY.replace(
            '<node id="1" lat="69.0" lon="17.0"/>',
            '<node id="1" lat="69.0" lon="17.0"><tag k="ele" v="123.5"/></node>',
        )
        graph = parse_osm_xml(osm_doc(body))
        assert graph.nodes[1].height_m == 123.5

    def test_deterministic_build(self):
        doc = osm_doc(TWO_NODE_WAY)
        a = parse_osm_xml(doc)
        b = parse_osm_xml(doc)
        assert sorted(a.edges) == sorted(b.edges)
        for eid in a.edges:
            assert a.edges[eid] == b.edges[eid]


class TestDeriveSpeedAndTime:
    def test_residential_default(self):
        speed, time_s = derive_speed_and_time("residential", None, 100.0)
        assert speed == 30.0
        assert time_s == pytest.approx(12.0)

    def test_numeric_maxspeed(self):
        speed, time_s = derive_speed_and_time("primary", "70", 1000.0)
        assert speed == 70.0
        assert time_s == pytest.approx(1000.0 / (70.0 / 3.6))

    def test_override_table(self):
        speed, time_s = derive_speed_and_time("residential", None, 36.0, {"residential": 36.0})
        assert speed == 36.0
        assert time_s == pytest.approx(3.6)

    def test_link_inherits_parent_speed(self):
        speed, _ = derive_speed_and_time("motorway_link", None, 100.0)
        assert speed == 90.0

    def test_unknown_class_warns_and_falls_back(self, caplog):
        with caplog.at_level(logging.WARNING):
            speed, _ = derive_speed_and_time("bogusway", None, 100.0)
        assert speed == 30.0
        assert any("bogusway" in message for message in caplog.messages)

    def test_non_numeric_maxspeed_falls_back(self):
        speed, _ = derive_speed_and_time("residential", "walk", 100.0)
        assert speed == 30.0

    def test_zero_length_rejected(self):
        with pytest.raises(GraphFormatError):
            derive_speed_and_time("residential", None, 0.0)


class TestEdgesCsv:
    def test_triangle_fixture(self):
        graph = triangle_graph()
        assert len(graph.nodes) == 3
        assert len(graph.edges) == 6
        for node, out_edges in graph.adjacency.items():
            for eid in out_edges:
                assert graph.edges[eid].from_node == node

    def test_zero_length_fatal(self):
        row = edge_row(1, 2, (69.0, 17.0), (69.0, 17.001))
        row["length_m"] = "0.0"
        with pytest.raises(GraphFormatError, match="row 1.*length_m"):
            load_edges_csv(edges_csv_text([row]).encode())

    def test_travel_time_consistency_enforced(self):
        row = edge_row(1, 2, (69.0, 17.0), (69.0, 17.001))
        row["travel_time_s"] = repr(float(row["travel_time_s"]) * 2.0)
        with pytest.raises(GraphFormatError, match="inconsistent"):
            load_edges_csv(edges_csv_text([row]).encode())

    def test_missing_column_fatal(self):
        with pytest.raises(GraphFormatError, match="missing column"):
            load_edges_csv(b"from_node,to_node\n1,2\n")

    def test_node_redefinition_fatal(self):
        rows = [
            edge_row(1, 2, (69.0, 17.0), (69.0, 17.001)),
            edge_row(1, 3, (69.5, 17.0), (69.0, 17.002)),
        ]
        with pytest.raises(GraphFormatError, match="redefined"):
            load_edges_csv(edges_csv_text(rows).encode())

    def test_roundtrip_isomorphic(self):
        source = parse_osm_xml(
            osm_doc(
                TWO_NODE_WAY
                + """
        <node id="3" lat="69.001" lon="17.001"/>
        <way id="101">
          <nd ref="2"/>
          <nd ref="3"/>
          <tag k="highway" v="primary"/>
          <tag k="oneway" v="yes"/>
          <tag k="maxspeed" v="70"/>
        </way>
        """
            )
        )
        exported = export_edges_csv_text(source)
        reloaded = load_edges_csv(exported.encode())
        assert _canonical(source) == _canonical(reloaded)
        # And a second round trip is byte-identical.
        assert export_edges_csv_text(reloaded) == exported

    def test_triangle_roundtrip(self):
        graph = triangle_graph()
        reloaded = load_edges_csv(export_edges_csv_text(graph).encode())
        assert _canonical(graph) == _canonical(reloaded)


def _canonical(graph):
    return sorted(
        (
            graph.nodes[e.from_node].lat,
            graph.nodes[e.from_node].lon,
            graph.nodes[e.to_node].lat,
            graph.nodes[e.to_node].lon,
            e.osmid,
            e.highway,
            e.length_m,
            e.speed_kph,
            e.travel_time_s,
            e.geometry,
        )
        for e in graph.edges.values()
    )


class TestSnapPoint:
    def test_point_on_vertex(self):
        graph = triangle_graph()
        result = snap_point(graph, (68.43, 17.42))
        assert result.distance_m == 0.0

    def test_perpendicular_ten_meters(self):
        graph = graph_from_rows(
            [edge_row(1, 2, (69.0, 17.0), (69.0, 17.01), oneway=True)]
        )
        offset = 10.0 / METERS_PER_DEGREE
        result = snap_point(graph, (69.0 + offset, 17.005))
        assert result.edge_id == 0
        assert result.distance_m == pytest.approx(10.0, rel=1e-3)
        assert 0.4 < result.offset_fraction < 0.6

    def test_no_match_beyond_radius(self):
        graph = triangle_graph()
        assert snap_point(graph, (68.45, 17.42), snap_radius_m=50.0) is None

    def test_empty_graph_error(self):
        from winterroute.roadgraph import RoadGraph, _GridIndex

        empty = RoadGraph(nodes={}, edges={}, adjacency={}, grid=_GridIndex())
        with pytest.raises(GraphFormatError):
            snap_point(empty, (69.0, 17.0))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_bruteforce_on_random_points(self, seed):
        rng = random.Random(seed)
        rows = []
        for index in range(40):
            lat = 69.0 + rng.random() * 0.02
            lon = 17.0 + rng.random() * 0.04
            lat2 = lat + rng.uniform(-0.004, 0.004)
            lon2 = lon + rng.uniform(-0.004, 0.004)
            if haversine_m((lat, lon), (lat2, lon2)) < 1.0:
                continue
            rows.append(
                edge_row(2 * index + 1, 2 * index + 2, (lat, lon), (lat2, lon2), oneway=True, osmid=index)
            )
        graph = graph_from_rows(rows)
        for _ in range(200):
            point = (69.0 + rng.random() * 0.025, 17.0 + rng.random() * 0.045)
            for radius in (50.0, 500.0, 100000.0):
                fast = snap_point(graph, point, radius)
                slow = snap_point_bruteforce(graph, point, radius)
                if slow is None:
                    assert fast is None
                else:
                    assert fast is not None
                    assert fast.edge_id == slow.edge_id
                    assert math.isclose(fast.distance_m, slow.distance_m, abs_tol=1e-6)

    def test_nearest_node_picks_closer_endpoint(self):
        graph = graph_from_rows(
            [edge_row(1, 2, (69.0, 17.0), (69.0, 17.01), oneway=True)]
        )
        assert nearest_node(graph, (69.0001, 17.0005), snap_radius_m=200.0) == 1
        assert nearest_node(graph, (69.0001, 17.0095), snap_radius_m=200.0) == 2
        assert nearest_node(graph, (69.5, 17.0)) is None
