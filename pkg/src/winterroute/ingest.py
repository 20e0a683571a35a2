"""Parsing, validation and per-location aggregation of road sensor CSV data.

The sensor CSV is UTF-8 with a header row and RFC 4180 quoting. A column
mapping (canonical field name -> source column name) decouples the parser
from vendor-specific exports; the identity mapping is assumed when none is
given. Coordinates are rounded to 4 decimal places on ingestion and
timestamps are normalized to UTC.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from enum import IntEnum
from pathlib import Path
from typing import IO, Iterable, NamedTuple

FRICTION_MIN = 0.1
FRICTION_MAX = 0.81
WATER_MM_MAX = 3.0

CANONICAL_FIELDS = (
    "timestamp",
    "lat",
    "lon",
    "friction",
    "state",
    "ta_c",
    "tsurf_c",
    "water_mm",
    "speed",
    "height_m",
    "accuracy",
)


class MappingError(ValueError):
    """A mapped source column is missing from the CSV header."""


class RoadState(IntEnum):
    DRY = 1
    MOIST = 2
    WET = 3
    ICY = 4
    SNOWY = 5
    SLUSHY = 6

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_code(cls, code: int) -> "RoadState":
        try:
            return cls(code)
        except ValueError:
            raise ValueError("state must be 1-6") from None

    @classmethod
    def from_name(cls, name: str) -> "RoadState":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown road state name: {name!r}") from None


@dataclass(frozen=True)
class SensorRecord:
    timestamp: datetime
    lat: float
    lon: float
    friction: float
    state: RoadState
    ta_c: float
    tsurf_c: float
    water_mm: float
    speed: float
    height_m: float
    accuracy: float


class RowError(NamedTuple):
    row: int  # 1-based data-row index, header excluded
    reason: str


@dataclass(frozen=True)
class LocationAggregate:
    cell: tuple[float, float]
    n_obs: int
    mean_friction: float
    modal_state: RoadState
    mean_ta_c: float
    mean_tsurf_c: float
    mean_water_mm: float
    mean_speed: float
    mean_height_m: float
    first_seen: datetime
    last_seen: datetime


class CountStats(NamedTuple):
    min: int
    max: int
    mean: float


def round_coordinate(x: float) -> float:
    """Round a decimal-degree coordinate to 4 decimal places.

    Ties round half away from zero; the operation is idempotent.
    """
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError("coordinate must be finite")
    try:
        quantized = Decimal(str(x)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP)
    except InvalidOperation:
        raise ValueError("coordinate must be finite") from None
    return float(quantized)


def validate_record(record: SensorRecord) -> list[str]:
    """Return every violated record invariant (empty list means valid)."""
    violations: list[str] = []
    if not (FRICTION_MIN <= record.friction <= FRICTION_MAX):
        violations.append(f"friction out of range [{FRICTION_MIN},{FRICTION_MAX}]")
    if not (0.0 <= record.water_mm <= WATER_MM_MAX):
        violations.append(f"water_mm out of range [0,{WATER_MM_MAX:g}]")
    if not (-90.0 <= record.lat <= 90.0):
        violations.append("lat out of range [-90,90]")
    if not (-180.0 <= record.lon <= 180.0):
        violations.append("lon out of range [-180,180]")
    return violations


def _open_text(source: str | Path | bytes | IO[bytes] | IO[str]) -> IO[str]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    raw = source.read()
    if isinstance(raw, bytes):
        return io.StringIO(raw.decode("utf-8"))
    return io.StringIO(raw)


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO 8601 timestamp, normalizing to UTC (naive means UTC)."""
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    moment = datetime.fromisoformat(cleaned)
    if moment.tzinfo is None:
        return moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc)


def _parse_float(text: str, field: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"unparseable {field}: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"non-finite {field}: {text!r}")
    return value


def _parse_row(row: dict[str, str], mapping: dict[str, str]) -> SensorRecord:
    raw: dict[str, str] = {}
    for field in CANONICAL_FIELDS:
        value = row.get(mapping[field])
        if value is None or value == "":
            raise ValueError(f"missing value for {field}")
        raw[field] = value

    try:
        timestamp = parse_timestamp(raw["timestamp"])
    except ValueError:
        raise ValueError(f"unparseable timestamp: {raw['timestamp']!r}") from None

    state_text = raw["state"].strip()
    try:
        state_code = int(state_text)
    except ValueError:
        raise ValueError(f"unparseable state: {state_text!r}") from None
    state = RoadState.from_code(state_code)

    return SensorRecord(
        timestamp=timestamp,
        lat=round_coordinate(_parse_float(raw["lat"], "lat")),
        lon=round_coordinate(_parse_float(raw["lon"], "lon")),
        friction=_parse_float(raw["friction"], "friction"),
        state=state,
        ta_c=_parse_float(raw["ta_c"], "ta_c"),
        tsurf_c=_parse_float(raw["tsurf_c"], "tsurf_c"),
        water_mm=_parse_float(raw["water_mm"], "water_mm"),
        speed=_parse_float(raw["speed"], "speed"),
        height_m=_parse_float(raw["height_m"], "height_m"),
        accuracy=_parse_float(raw["accuracy"], "accuracy"),
    )


def parse_sensor_csv(
    source: str | Path | bytes | IO[bytes] | IO[str],
    mapping: dict[str, str] | None = None,
) -> tuple[list[SensorRecord], list[RowError]]:
    """Parse a sensor CSV into records plus per-row errors.

    Every data row yields either exactly one record or exactly one row error,
    so ``len(records) + len(row_errors)`` equals the data-row count. Rows that
    parse but violate a record invariant (out-of-range friction, water layer,
    coordinates) are rejected with a row error rather than clamped.

    Raises :class:`MappingError` when a mapped column is absent from the
    header.
    """
    full_mapping = {field: field for field in CANONICAL_FIELDS}
    if mapping:
        full_mapping.update(mapping)

    stream = _open_text(source)
    reader = csv.DictReader(stream)
    header = reader.fieldnames or []
    for field in CANONICAL_FIELDS:
        if full_mapping[field] not in header:
            raise MappingError(
                f"column {full_mapping[field]!r} (mapped from {field!r}) not in header"
            )

    records: list[SensorRecord] = []
    row_errors: list[RowError] = []
    for index, row in enumerate(reader, start=1):
        try:
            record = _parse_row(row, full_mapping)
        except ValueError as exc:
            row_errors.append(RowError(index, str(exc)))
            continue
        violations = validate_record(record)
        if violations:
            row_errors.append(RowError(index, "; ".join(violations)))
        else:
            records.append(record)
    return records, row_errors


def write_sensor_csv(records: Iterable[SensorRecord], sink: IO[str]) -> None:
    """Serialize records with canonical column names (round-trips exactly)."""
    writer = csv.writer(sink)
    writer.writerow(CANONICAL_FIELDS)
    for r in records:
        writer.writerow(
            [
                r.timestamp.isoformat(),
                repr(r.lat),
                repr(r.lon),
                repr(r.friction),
                int(r.state),
                repr(r.ta_c),
                repr(r.tsurf_c),
                repr(r.water_mm),
                repr(r.speed),
                repr(r.height_m),
                repr(r.accuracy),
            ]
        )


def aggregate_by_location(records: list[SensorRecord]) -> list[LocationAggregate]:
    """Aggregate records into one summary per distinct 4-dp coordinate cell.

    The modal state breaks ties toward the lower state code. Aggregates are
    returned sorted by cell so the output is deterministic.
    """
    groups: dict[tuple[float, float], list[SensorRecord]] = {}
    for record in records:
        groups.setdefault((record.lat, record.lon), []).append(record)

    aggregates: list[LocationAggregate] = []
    for cell in sorted(groups):
        members = groups[cell]
        n = len(members)
        state_counts = Counter(r.state for r in members)
        top = max(state_counts.values())
        modal_state = min(s for s, c in state_counts.items() if c == top)
        aggregates.append(
            LocationAggregate(
                cell=cell,
                n_obs=n,
                mean_friction=sum(r.friction for r in members) / n,
                modal_state=modal_state,
                mean_ta_c=sum(r.ta_c for r in members) / n,
                mean_tsurf_c=sum(r.tsurf_c for r in members) / n,
                mean_water_mm=sum(r.water_mm for r in members) / n,
                mean_speed=sum(r.speed for r in members) / n,
                mean_height_m=sum(r.height_m for r in members) / n,
                first_seen=min(r.timestamp for r in members),
                last_seen=max(r.timestamp for r in members),
            )
        )
    return aggregates


def location_count_stats(aggregates: list[LocationAggregate]) -> CountStats:
    """Min/max/mean of observations per cell, for dataset density reporting."""
    if not aggregates:
        return CountStats(0, 0, 0.0)
    counts = [a.n_obs for a in aggregates]
    return CountStats(min(counts), max(counts), sum(counts) / len(counts))
