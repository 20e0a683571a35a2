"""Road-condition-aware route planning for winter road networks."""

from .geo import haversine_m
from .ingest import (
    LocationAggregate,
    RoadState,
    SensorRecord,
    aggregate_by_location,
    parse_sensor_csv,
    round_coordinate,
    validate_record,
)
from .model import (
    EvalReport,
    Standardizer,
    TrainedModel,
    evaluate_classifier,
    evaluate_regressor,
    fit_standardizer,
    knn_predict_state,
    knn_predict_value,
    load_model,
    save_model,
    split_dataset,
    train_model,
)
from .roadgraph import (
    GraphNode,
    RoadEdge,
    RoadGraph,
    derive_speed_and_time,
    load_edges_csv,
    parse_osm_xml,
    snap_point,
)
from .route import (
    CostParams,
    Route,
    compare_routes,
    edge_cost,
    shortest_path,
    shortest_path_astar,
)
from .safety import (
    EdgeCondition,
    FrictionRateTable,
    RateTables,
    StateRateTable,
    assign_edge_conditions,
    default_rate_tables,
    load_rate_tables,
    rate_for_friction,
    rate_for_state,
    safety_metric,
)
from .weather import (
    FeatureRow,
    WeatherDaily,
    fetch_daily_weather,
    join_features,
    load_weather_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CostParams",
    "EdgeCondition",
    "EvalReport",
    "FeatureRow",
    "FrictionRateTable",
    "GraphNode",
    "LocationAggregate",
    "RateTables",
    "RoadEdge",
    "RoadGraph",
    "RoadState",
    "Route",
    "SensorRecord",
    "Standardizer",
    "StateRateTable",
    "TrainedModel",
    "WeatherDaily",
    "aggregate_by_location",
    "assign_edge_conditions",
    "compare_routes",
    "default_rate_tables",
    "derive_speed_and_time",
    "edge_cost",
    "evaluate_classifier",
    "evaluate_regressor",
    "fetch_daily_weather",
    "fit_standardizer",
    "haversine_m",
    "join_features",
    "knn_predict_state",
    "knn_predict_value",
    "load_edges_csv",
    "load_model",
    "load_rate_tables",
    "load_weather_csv",
    "parse_osm_xml",
    "parse_sensor_csv",
    "rate_for_friction",
    "rate_for_state",
    "round_coordinate",
    "safety_metric",
    "save_model",
    "shortest_path",
    "shortest_path_astar",
    "snap_point",
    "split_dataset",
    "train_model",
    "validate_record",
    "__version__",
]
