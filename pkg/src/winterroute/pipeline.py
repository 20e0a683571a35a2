"""End-to-end glue: dataset building, training, snapshots, and JSON answers.

The CLI and the HTTP service both call into this module, so a route query
answered on either surface produces the same document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .config import AppConfig
from .geo import LatLon
from .ingest import (
    LocationAggregate,
    RoadState,
    RowError,
    SensorRecord,
    aggregate_by_location,
    location_count_stats,
    parse_sensor_csv,
)
from .model import (
    EvalReport,
    TrainedModel,
    evaluate_classifier,
    evaluate_regressor,
    knn_predict_state,
    knn_predict_value,
    load_model,
    save_model,
    split_dataset,
    train_model,
)
from .roadgraph import RoadGraph, load_edges_csv, nearest_node, parse_osm_xml
from .route import CostParams, Route, shortest_path
from .safety import (
    DEFAULT_FALLBACK_CONDITION,
    PESSIMISTIC_FALLBACK_CONDITION,
    EdgeCondition,
    RateTables,
    assign_edge_conditions,
    default_rate_tables,
    load_rate_tables,
    make_edge_feature_context,
    safety_metric,
)
from .weather import (
    CacheMissError,
    FeatureRow,
    WeatherDaily,
    fetch_daily_weather,
    join_features,
    load_provider_config,
    load_weather_csv,
)


class NoPathError(Exception):
    """Destination is unreachable from the origin."""


class EndpointSnapError(ValueError):
    """An endpoint could not be matched to the road network."""


@dataclass(frozen=True)
class Snapshot:
    """Immutable data a running service answers queries from."""

    graph: RoadGraph
    conditions: dict[int, EdgeCondition]
    tables: RateTables
    default_alpha: float
    snap_radius_m: float
    classifier: TrainedModel | None = None
    regressor: TrainedModel | None = None


def load_graph(config: AppConfig) -> RoadGraph:
    if config.edges_csv:
        return load_edges_csv(config.edges_csv)
    if config.osm_xml:
        return parse_osm_xml(config.osm_xml)
    raise ValueError("configuration provides neither edges_csv nor osm_xml")


def load_tables(config: AppConfig) -> RateTables:
    if config.rate_tables:
        return load_rate_tables(config.rate_tables)
    return default_rate_tables()


def ingest_sensors(
    config: AppConfig,
) -> tuple[list[SensorRecord], list[RowError], list[LocationAggregate]]:
    mapping = None
    if config.sensor_mapping:
        with open(config.sensor_mapping, "r", encoding="utf-8") as fh:
            mapping = json.load(fh)
    records, errors = parse_sensor_csv(config.sensor_csv, mapping)
    return records, errors, aggregate_by_location(records)


def ingest_summary(
    records: Sequence[SensorRecord],
    errors: Sequence[RowError],
    aggregates: Sequence[LocationAggregate],
) -> dict[str, Any]:
    stats = location_count_stats(list(aggregates))
    return {
        "rows": len(records) + len(errors),
        "parsed": len(records),
        "row_errors": [{"row": e.row, "reason": e.reason} for e in errors],
        "locations": len(aggregates),
        "n_obs": {"min": stats.min, "max": stats.max, "mean": stats.mean},
    }


def build_dataset(config: AppConfig) -> tuple[list[FeatureRow], list[int]]:
    records, _errors, _aggregates = ingest_sensors(config)
    weather = load_weather(config, records)
    return join_features(records, weather, config.feature_list, config.join_radius_m)


def load_weather(config: AppConfig, records: Sequence[SensorRecord]) -> list[WeatherDaily]:
    """Weather rows from the CSV, or from the (cached) provider per cell/date.

    Provider mode asks once per distinct (cell, date) of the sensor records;
    cache misses in offline mode simply leave those records unmatched at join
    time.
    """
    if config.weather_csv:
        rows, _row_errors = load_weather_csv(config.weather_csv)
        return rows
    if not config.weather_cache_dir:
        return []
    provider = None
    if config.weather_provider:
        provider = load_provider_config(config.weather_provider)
    out: list[WeatherDaily] = []
    for cell, day in sorted({((r.lat, r.lon), r.timestamp.date()) for r in records}):
        try:
            out.append(fetch_daily_weather(provider, cell, day, config.weather_cache_dir))
        except CacheMissError:
            continue
    return out


@dataclass(frozen=True)
class TrainingResult:
    classifier: TrainedModel
    regressor: TrainedModel
    classifier_report: EvalReport
    regressor_report: EvalReport
    n_rows: int
    n_unmatched: int


def train_models(config: AppConfig) -> TrainingResult:
    """Train the state classifier and the risk regressor from one dataset.

    Regression targets are the risk metric evaluated at each row's measured
    friction and state under the active tables.
    """
    rows, unmatched = build_dataset(config)
    if len(rows) < 2:
        raise ValueError("not enough joined feature rows to train on")
    tables = load_tables(config)
    train_rows, test_rows = split_dataset(rows, config.test_fraction, config.seed)
    if not train_rows or not test_rows:
        raise ValueError("split produced an empty train or test set")

    classifier = train_model(
        train_rows, config.feature_list, k=config.k, task="classify", seed=config.seed
    )
    classifier_report = evaluate_classifier(classifier, test_rows)

    def target(row: FeatureRow) -> float:
        return safety_metric(row.label_friction, row.label_state, tables)

    regressor = train_model(
        train_rows,
        config.feature_list,
        k=config.k,
        task="regress",
        targets=[target(r) for r in train_rows],
        seed=config.seed,
    )
    regressor_report = evaluate_regressor(regressor, test_rows, [target(r) for r in test_rows])
    return TrainingResult(
        classifier=classifier,
        regressor=regressor,
        classifier_report=classifier_report,
        regressor_report=regressor_report,
        n_rows=len(rows),
        n_unmatched=len(unmatched),
    )


def build_conditions(
    config: AppConfig,
    graph: RoadGraph,
    classifier: TrainedModel | None = None,
    shared_context: dict[str, float] | None = None,
) -> dict[int, EdgeCondition]:
    """Assign conditions; ``shared_context`` supplies region-wide feature
    values so unhit edges can be classified instead of defaulted."""
    fallback = (
        PESSIMISTIC_FALLBACK_CONDITION
        if config.fallback_mode == "pessimistic"
        else DEFAULT_FALLBACK_CONDITION
    )
    aggregates: list[LocationAggregate] = []
    if config.sensor_csv and Path(config.sensor_csv).exists():
        _records, _errors, aggregates = ingest_sensors(config)
    context = None
    if classifier is not None and shared_context is not None:
        context = make_edge_feature_context(classifier.feature_list, shared_context, graph)
    return assign_edge_conditions(
        graph,
        aggregates,
        model=classifier,
        feature_context=context,
        snap_radius_m=config.snap_radius_m,
        fallback_condition=fallback,
    )


def conditions_to_doc(conditions: dict[int, EdgeCondition]) -> dict[str, Any]:
    return {
        "conditions": [
            {
                "edge_id": c.edge_id,
                "friction_est": c.friction_est,
                "state": c.state_est.label,
                "source": c.source,
            }
            for _, c in sorted(conditions.items())
        ]
    }


def conditions_from_doc(doc: dict[str, Any]) -> dict[int, EdgeCondition]:
    out: dict[int, EdgeCondition] = {}
    for item in doc["conditions"]:
        condition = EdgeCondition(
            edge_id=int(item["edge_id"]),
            friction_est=float(item["friction_est"]),
            state_est=RoadState.from_name(item["state"]),
            source=item["source"],
        )
        out[condition.edge_id] = condition
    return out


def load_conditions(path: str | Path) -> dict[int, EdgeCondition]:
    with open(path, "r", encoding="utf-8") as fh:
        return conditions_from_doc(json.load(fh))


def save_conditions(conditions: dict[int, EdgeCondition], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(conditions_to_doc(conditions), fh)


def build_snapshot(config: AppConfig) -> Snapshot:
    graph = load_graph(config)
    tables = load_tables(config)
    classifier = None
    regressor = None
    if config.classifier_model and Path(config.classifier_model).exists():
        classifier = load_model(config.classifier_model)
    if config.regressor_model and Path(config.regressor_model).exists():
        regressor = load_model(config.regressor_model)
    if config.conditions_json and Path(config.conditions_json).exists():
        conditions = load_conditions(config.conditions_json)
        missing = set(graph.edges) - set(conditions)
        if missing:
            raise ValueError(f"conditions file covers {len(conditions)} edges; "
                             f"{len(missing)} graph edges lack a condition")
    else:
        conditions = build_conditions(config, graph, classifier)
    return Snapshot(
        graph=graph,
        conditions=conditions,
        tables=tables,
        default_alpha=config.default_alpha,
        snap_radius_m=config.snap_radius_m,
        classifier=classifier,
        regressor=regressor,
    )


def plan_route(snapshot: Snapshot, origin: LatLon, destination: LatLon, alpha: float) -> Route:
    src = nearest_node(snapshot.graph, origin, snapshot.snap_radius_m)
    if src is None:
        raise EndpointSnapError(f"origin {origin} is not near the road network")
    dst = nearest_node(snapshot.graph, destination, snapshot.snap_radius_m)
    if dst is None:
        raise EndpointSnapError(f"destination {destination} is not near the road network")
    params = CostParams.for_tables(alpha, snapshot.tables)
    route = shortest_path(snapshot.graph, snapshot.conditions, src, dst, params, snapshot.tables)
    if route is None:
        raise NoPathError(f"no path from node {src} to node {dst}")
    return route


def route_geometry(graph: RoadGraph, route: Route) -> list[list[float]]:
    """Concatenated edge polylines as [lat, lon] pairs, duplicates collapsed."""
    points: list[list[float]] = []
    if not route.edge_seq:
        node = graph.nodes[route.node_seq[0]]
        return [[node.lat, node.lon]]
    for eid in route.edge_seq:
        for lat, lon in graph.edges[eid].geometry:
            if points and points[-1] == [lat, lon]:
                continue
            points.append([lat, lon])
    return points


def route_to_json(snapshot: Snapshot, route: Route, alpha: float) -> dict[str, Any]:
    return {
        "geometry": route_geometry(snapshot.graph, route),
        "total_time_s": route.total_time_s,
        "total_distance_m": route.total_distance_m,
        "risk_sum": route.risk_sum,
        "alpha": alpha,
        "edges": [
            {"edge_id": p.edge_id, "state": p.state.label, "risk": p.risk}
            for p in route.per_edge
        ],
    }


def network_geojson(snapshot: Snapshot) -> dict[str, Any]:
    """GeoJSON FeatureCollection of every edge (coordinates are [lon, lat])."""
    features = []
    for eid in sorted(snapshot.graph.edges):
        edge = snapshot.graph.edges[eid]
        condition = snapshot.conditions[eid]
        risk = safety_metric(condition.friction_est, condition.state_est, snapshot.tables)
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[lon, lat] for lat, lon in edge.geometry],
                },
                "properties": {
                    "edge_id": eid,
                    "highway": edge.highway,
                    "state_est": condition.state_est.label,
                    "risk": risk,
                    "source": condition.source,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def predict_response(snapshot: Snapshot, features: dict[str, float]) -> dict[str, Any]:
    if snapshot.classifier is None or snapshot.regressor is None:
        raise ValueError("no trained models loaded")

    def vector(model: TrainedModel) -> list[float]:
        missing = [n for n in model.feature_list if n not in features]
        if missing:
            raise ValueError(f"missing features: {', '.join(missing)}")
        return [float(features[n]) for n in model.feature_list]

    state, votes = knn_predict_state(snapshot.classifier, vector(snapshot.classifier))
    metric = knn_predict_value(snapshot.regressor, vector(snapshot.regressor))
    return {
        "state": state.label,
        "votes": {s.label: count for s, count in sorted(votes.items())},
        "safety_metric": metric,
    }


def write_models(result: TrainingResult, classifier_path: str | Path, regressor_path: str | Path) -> None:
    save_model(result.classifier, classifier_path)
    save_model(result.regressor, regressor_path)
