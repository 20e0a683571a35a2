"""Application configuration: one JSON file shared by the CLI and the server."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .model import DEFAULT_FEATURES, DEFAULT_K
from .roadgraph import DEFAULT_SNAP_RADIUS_M
from .weather import DEFAULT_JOIN_RADIUS_M


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8640
    static_dir: str | None = None


@dataclass(frozen=True)
class AppConfig:
    sensor_csv: str | None = None
    sensor_mapping: str | None = None
    weather_csv: str | None = None
    weather_provider: str | None = None
    weather_cache_dir: str | None = None
    osm_xml: str | None = None
    edges_csv: str | None = None
    conditions_json: str | None = None
    classifier_model: str | None = None
    regressor_model: str | None = None
    rate_tables: str | None = None
    feature_list: tuple[str, ...] = DEFAULT_FEATURES
    k: int = DEFAULT_K
    default_alpha: float = 1.0
    snap_radius_m: float = DEFAULT_SNAP_RADIUS_M
    join_radius_m: float = DEFAULT_JOIN_RADIUS_M
    test_fraction: float = 0.25
    seed: int = 0
    fallback_mode: str = "optimistic"
    server: ServerConfig = field(default_factory=ServerConfig)


_PATH_KEYS = (
    "sensor_csv",
    "sensor_mapping",
    "weather_csv",
    "weather_provider",
    "weather_cache_dir",
    "osm_xml",
    "edges_csv",
    "conditions_json",
    "classifier_model",
    "regressor_model",
    "rate_tables",
)


def load_app_config(path: str | Path) -> AppConfig:
    base = Path(path).parent
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)

    paths = doc.get("paths", {})
    resolved: dict[str, str | None] = {}
    for key in _PATH_KEYS:
        value = paths.get(key)
        resolved[key] = str(base / value) if value else None

    server_doc = doc.get("server", {})
    static = server_doc.get("static_dir")
    server = ServerConfig(
        host=str(server_doc.get("host", "127.0.0.1")),
        port=int(server_doc.get("port", 8640)),
        static_dir=str(base / static) if static else None,
    )
    if doc.get("fallback_mode", "optimistic") not in ("optimistic", "pessimistic"):
        raise ValueError("fallback_mode must be 'optimistic' or 'pessimistic'")
    return AppConfig(
        feature_list=tuple(doc.get("feature_list", DEFAULT_FEATURES)),
        k=int(doc.get("k", DEFAULT_K)),
        default_alpha=float(doc.get("default_alpha", 1.0)),
        snap_radius_m=float(doc.get("snap_radius_m", DEFAULT_SNAP_RADIUS_M)),
        join_radius_m=float(doc.get("join_radius_m", DEFAULT_JOIN_RADIUS_M)),
        test_fraction=float(doc.get("test_fraction", 0.25)),
        seed=int(doc.get("seed", 0)),
        fallback_mode=str(doc.get("fallback_mode", "optimistic")),
        server=server,
        **resolved,
    )
