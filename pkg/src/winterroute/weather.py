"""Daily historical weather: CSV loading, cached provider fetches, feature joins.

Weather arrives either from a canonical CSV or from a configurable HTTP
provider with a local JSON file cache, so the whole pipeline can run offline.
Joining onto sensor records is daily-granular: a record picks the nearest
same-date weather cell within a configurable radius.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import IO, Any, Callable, Sequence

from .geo import haversine_m
from .ingest import RoadState, RowError, SensorRecord, _open_text, round_coordinate

DEFAULT_JOIN_RADIUS_M = 5_000.0

WEATHER_VALUE_FIELDS = (
    "maxtemp_c",
    "mintemp_c",
    "temp_c",
    "dewpoint_c",
    "heatindex_c",
    "total_snow_cm",
    "sun_hour",
    "uv_index",
    "uv",
    "wind_gust_kmph",
    "windspeed_kmph",
    "winddir_degree",
    "cloudcover",
    "humidity",
    "precip_mm",
    "pressure",
    "visibility",
)

WEATHER_COLUMNS = ("lat", "lon", "date") + WEATHER_VALUE_FIELDS

# Feature names resolvable from a sensor record.
SENSOR_FEATURES = ("ta_c", "tsurf_c", "water_mm", "speed", "height_m")


class FetchError(Exception):
    """Network or HTTP failure while fetching weather; retryable."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status
        self.retryable = True


class ResponseMappingError(ValueError):
    """Provider response did not contain a mappable weather document."""


class CacheMissError(LookupError):
    """Offline fetch found no cached document for (provider, cell, date)."""


@dataclass(frozen=True)
class WeatherDaily:
    cell: tuple[float, float]
    date: date
    maxtemp_c: float
    mintemp_c: float
    temp_c: float
    dewpoint_c: float
    heatindex_c: float
    total_snow_cm: float
    sun_hour: float
    uv_index: float
    uv: float
    wind_gust_kmph: float
    windspeed_kmph: float
    winddir_degree: float
    cloudcover: float
    humidity: float
    precip_mm: float
    pressure: float
    visibility: float


@dataclass(frozen=True)
class FeatureRow:
    features: tuple[float, ...]
    label_state: RoadState | None = None
    label_friction: float | None = None


@dataclass(frozen=True)
class ProviderConfig:
    """Weather provider endpoint: base URL, key env var and response mapping.

    ``field_map`` maps each canonical weather field to a dotted path into the
    provider's JSON response (list indices are numeric segments, e.g.
    ``"data.weather.0.maxtempC"``).
    """

    id: str
    base_url: str
    api_key_env_var: str
    field_map: dict[str, str]


def validate_weather(w: WeatherDaily) -> list[str]:
    violations: list[str] = []
    for name in WEATHER_VALUE_FIELDS:
        if not math.isfinite(getattr(w, name)):
            violations.append(f"non-finite {name}")
    if violations:
        return violations
    if w.mintemp_c > w.maxtemp_c:
        violations.append("mintemp_c greater than maxtemp_c")
    for name in ("cloudcover", "humidity"):
        if not (0.0 <= getattr(w, name) <= 100.0):
            violations.append(f"{name} out of range [0,100]")
    if w.total_snow_cm < 0.0:
        violations.append("total_snow_cm negative")
    if w.precip_mm < 0.0:
        violations.append("precip_mm negative")
    if not (0.0 <= w.winddir_degree < 360.0):
        violations.append("winddir_degree out of range [0,360)")
    return violations


def _weather_from_values(cell: tuple[float, float], day: date, values: dict[str, float]) -> WeatherDaily:
    return WeatherDaily(cell=cell, date=day, **values)


def load_weather_csv(
    source: str | Path | bytes | IO[bytes] | IO[str],
) -> tuple[list[WeatherDaily], list[RowError]]:
    """Load canonical weather CSV; invariant-violating rows become row errors."""
    stream = _open_text(source)
    reader = csv.DictReader(stream)
    header = reader.fieldnames or []
    for column in WEATHER_COLUMNS:
        if column not in header:
            raise ValueError(f"weather CSV missing column {column!r}")

    out: list[WeatherDaily] = []
    row_errors: list[RowError] = []
    for index, row in enumerate(reader, start=1):
        try:
            cell = (
                round_coordinate(float(row["lat"])),
                round_coordinate(float(row["lon"])),
            )
            day = date.fromisoformat(row["date"].strip())
            values = {name: float(row[name]) for name in WEATHER_VALUE_FIELDS}
        except (ValueError, TypeError) as exc:
            row_errors.append(RowError(index, f"unparseable row: {exc}"))
            continue
        record = _weather_from_values(cell, day, values)
        violations = validate_weather(record)
        if violations:
            row_errors.append(RowError(index, "; ".join(violations)))
        else:
            out.append(record)
    return out, row_errors


def load_provider_config(source: str | Path | bytes | IO[bytes] | IO[str]) -> ProviderConfig:
    doc = json.load(_open_text(source))
    missing = [k for k in ("id", "base_url", "api_key_env_var", "field_map") if k not in doc]
    if missing:
        raise ValueError(f"provider config missing fields: {', '.join(missing)}")
    return ProviderConfig(
        id=str(doc["id"]),
        base_url=str(doc["base_url"]),
        api_key_env_var=str(doc["api_key_env_var"]),
        field_map=dict(doc["field_map"]),
    )


def _resolve_path(payload: Any, dotted: str) -> Any:
    current = payload
    for part in dotted.split("."):
        if isinstance(current, list):
            try:
                current = current[int(part)]
            except (ValueError, IndexError):
                raise ResponseMappingError(f"path segment {part!r} not found in response") from None
        elif isinstance(current, dict):
            if part not in current:
                raise ResponseMappingError(f"path segment {part!r} not found in response")
            current = current[part]
        else:
            raise ResponseMappingError(f"path segment {part!r} not found in response")
    return current


def _cache_path(cache_dir: Path, provider_id: str, cell: tuple[float, float], day: date) -> Path:
    cell_dir = f"{cell[0]:.4f}_{cell[1]:.4f}"
    return cache_dir / cell_dir / f"{day.isoformat()}_{provider_id}.json"


def _find_cached(cache_dir: Path, cell: tuple[float, float], day: date) -> Path | None:
    """Any provider's cached document for (cell, date), lowest name first."""
    cell_dir = cache_dir / f"{cell[0]:.4f}_{cell[1]:.4f}"
    if not cell_dir.is_dir():
        return None
    candidates = sorted(cell_dir.glob(f"{day.isoformat()}_*.json"))
    return candidates[0] if candidates else None


def _weather_to_doc(w: WeatherDaily) -> dict[str, Any]:
    doc: dict[str, Any] = {"lat": w.cell[0], "lon": w.cell[1], "date": w.date.isoformat()}
    doc.update({name: getattr(w, name) for name in WEATHER_VALUE_FIELDS})
    return doc


def _weather_from_doc(doc: dict[str, Any]) -> WeatherDaily:
    cell = (round_coordinate(float(doc["lat"])), round_coordinate(float(doc["lon"])))
    day = date.fromisoformat(doc["date"])
    values = {name: float(doc[name]) for name in WEATHER_VALUE_FIELDS}
    return _weather_from_values(cell, day, values)


def _requests_transport(url: str, params: dict[str, str]) -> tuple[int, Any]:
    import requests

    try:
        response = requests.get(url, params=params, timeout=30)
    except requests.RequestException as exc:
        raise FetchError(f"request failed: {exc}") from exc
    try:
        payload = response.json()
    except ValueError:
        payload = None
    return response.status_code, payload


Transport = Callable[[str, dict[str, str]], "tuple[int, Any]"]


def fetch_daily_weather(
    provider: ProviderConfig | None,
    cell: tuple[float, float],
    day: date,
    cache_dir: str | Path,
    transport: Transport | None = None,
) -> WeatherDaily:
    """Fetch one day of weather for a cell, cache-first.

    A cached document is always served without touching the network, so with
    a fixed cache this is a pure function of (cell, date). Without a provider
    (offline mode) any provider's cached document for the key is served and a
    cache miss raises :class:`CacheMissError`. Cache writes go to a temp file
    followed by an atomic rename, so concurrent fetches of the same key
    cannot corrupt the cache.
    """
    cache_root = Path(cache_dir)
    if provider is None:
        cached = _find_cached(cache_root, cell, day)
        if cached is None:
            raise CacheMissError(f"no cached weather for cell={cell} date={day.isoformat()}")
        with open(cached, "r", encoding="utf-8") as fh:
            return _weather_from_doc(json.load(fh))
    path = _cache_path(cache_root, provider.id, cell, day)
    if path.exists():
        with open(path, "r", encoding="utf-8") as fh:
            return _weather_from_doc(json.load(fh))

    send = transport or _requests_transport
    params = {
        "lat": f"{cell[0]:.4f}",
        "lon": f"{cell[1]:.4f}",
        "date": day.isoformat(),
        "key": os.environ.get(provider.api_key_env_var, ""),
    }
    status, payload = send(provider.base_url, params)
    if status != 200:
        raise FetchError(f"provider returned HTTP {status}", status=status)
    if payload is None:
        raise ResponseMappingError("provider response is not JSON")

    values: dict[str, float] = {}
    for name in WEATHER_VALUE_FIELDS:
        if name not in provider.field_map:
            raise ResponseMappingError(f"field_map missing entry for {name!r}")
        raw = _resolve_path(payload, provider.field_map[name])
        try:
            values[name] = float(raw)
        except (TypeError, ValueError):
            raise ResponseMappingError(f"field {name!r} value {raw!r} is not numeric") from None
    record = _weather_from_values((round_coordinate(cell[0]), round_coordinate(cell[1])), day, values)
    violations = validate_weather(record)
    if violations:
        raise ResponseMappingError("; ".join(violations))

    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(_weather_to_doc(record), fh)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return record


def feature_names() -> tuple[str, ...]:
    """All feature names resolvable by :func:`join_features`."""
    return SENSOR_FEATURES + WEATHER_VALUE_FIELDS


def join_features(
    records: Sequence[SensorRecord],
    weather: Sequence[WeatherDaily],
    feature_list: Sequence[str],
    join_radius_m: float = DEFAULT_JOIN_RADIUS_M,
) -> tuple[list[FeatureRow], list[int]]:
    """Join sensor records with same-date weather into labeled feature rows.

    Each record joins the weather entry of the same UTC date whose cell is
    nearest by great-circle distance within ``join_radius_m``; distance ties
    go to the lower (lat, lon). Records with no candidate are returned in
    ``unmatched`` (by input index) instead of being NaN-filled. When the
    feature list references no weather field the join is skipped entirely and
    every record produces a row.
    """
    if not feature_list:
        raise ValueError("feature_list must not be empty")
    unknown = [f for f in feature_list if f not in SENSOR_FEATURES and f not in WEATHER_VALUE_FIELDS]
    if unknown:
        raise ValueError(f"unknown feature names: {', '.join(unknown)}")
    needs_weather = any(f in WEATHER_VALUE_FIELDS for f in feature_list)

    by_date: dict[date, list[WeatherDaily]] = {}
    for entry in weather:
        by_date.setdefault(entry.date, []).append(entry)

    rows: list[FeatureRow] = []
    unmatched: list[int] = []
    for index, record in enumerate(records):
        joined: WeatherDaily | None = None
        if needs_weather:
            candidates = by_date.get(record.timestamp.date(), [])
            best: tuple[float, float, float] | None = None
            for entry in candidates:
                dist = haversine_m((record.lat, record.lon), entry.cell)
                if dist > join_radius_m:
                    continue
                key = (dist, entry.cell[0], entry.cell[1])
                if best is None or key < best:
                    best = key
                    joined = entry
            if joined is None:
                unmatched.append(index)
                continue
        values = []
        for name in feature_list:
            if name in SENSOR_FEATURES:
                values.append(float(getattr(record, name)))
            else:
                values.append(float(getattr(joined, name)))
        rows.append(
            FeatureRow(
                features=tuple(values),
                label_state=record.state,
                label_friction=record.friction,
            )
        )
    return rows, unmatched
