"""Accident-rate tables, the per-edge risk metric, and edge condition assignment.

The risk of a road segment is the product of two configured accident rates:
one looked up by friction bucket, one by road state. Larger values mean more
dangerous. The shipped default tables live in ``defaults/rate_tables.json``
and are plain configuration, not learned quantities; both tables are
validated on load (friction rates must not increase with friction, and no
state may be safer than Dry).
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Callable, Literal, Sequence

from .ingest import FRICTION_MAX, FRICTION_MIN, LocationAggregate, RoadState
from .roadgraph import DEFAULT_SNAP_RADIUS_M, RoadEdge, RoadGraph, snap_point

ConditionSource = Literal["measured", "predicted", "default"]

DEFAULT_FALLBACK_CONDITION: tuple[float, RoadState] = (0.8, RoadState.DRY)
PESSIMISTIC_FALLBACK_CONDITION: tuple[float, RoadState] = (0.15, RoadState.ICY)

# Friction assumed for an edge whose state was predicted by the classifier.
DEFAULT_STATE_FRICTION: dict[RoadState, float] = {
    RoadState.DRY: 0.8,
    RoadState.MOIST: 0.65,
    RoadState.WET: 0.5,
    RoadState.ICY: 0.15,
    RoadState.SNOWY: 0.25,
    RoadState.SLUSHY: 0.3,
}


class TableValidationError(ValueError):
    """A rate table violates its structural or monotonicity invariants."""


@dataclass(frozen=True)
class FrictionRateTable:
    """Piecewise-constant accident rate over friction buckets.

    ``breakpoints`` partition [0.1, 0.81] into half-open buckets
    [b_i, b_{i+1}); the final bucket is closed at 0.81. Rates must be
    positive and non-increasing as friction increases.
    """

    breakpoints: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        bp, rates = self.breakpoints, self.rates
        if len(bp) < 2:
            raise TableValidationError("friction table needs at least two breakpoints")
        if len(rates) != len(bp) - 1:
            raise TableValidationError(
                f"expected {len(bp) - 1} friction rates for {len(bp)} breakpoints, got {len(rates)}"
            )
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise TableValidationError("friction breakpoints must be strictly increasing")
        if bp[0] != FRICTION_MIN or bp[-1] != FRICTION_MAX:
            raise TableValidationError(
                f"friction breakpoints must span exactly [{FRICTION_MIN},{FRICTION_MAX}]"
            )
        if any(r <= 0.0 for r in rates):
            raise TableValidationError("friction rates must be strictly positive")
        if any(r2 > r1 for r1, r2 in zip(rates, rates[1:])):
            raise TableValidationError("friction rates must be non-increasing with friction")


@dataclass(frozen=True)
class StateRateTable:
    rates: dict[RoadState, float]

    def __post_init__(self) -> None:
        missing = [s.label for s in RoadState if s not in self.rates]
        if missing:
            raise TableValidationError(f"state rates missing: {', '.join(missing)}")
        if any(r <= 0.0 for r in self.rates.values()):
            raise TableValidationError("state rates must be strictly positive")
        dry = self.rates[RoadState.DRY]
        worse = [s.label for s, r in self.rates.items() if r < dry]
        if worse:
            raise TableValidationError(f"no state may have a lower rate than Dry: {', '.join(worse)}")


@dataclass(frozen=True)
class RateTables:
    friction: FrictionRateTable
    state: StateRateTable
    exposure_unit: str = "accidents per unit exposure"


@dataclass(frozen=True)
class EdgeCondition:
    edge_id: int
    friction_est: float
    state_est: RoadState
    source: ConditionSource

    def __post_init__(self) -> None:
        if not (FRICTION_MIN <= self.friction_est <= FRICTION_MAX):
            raise ValueError(
                f"friction_est must be in [{FRICTION_MIN},{FRICTION_MAX}], got {self.friction_est}"
            )


def rate_for_friction(table: FrictionRateTable, friction: float) -> float:
    """Accident rate of the bucket containing ``friction`` (top bucket closed)."""
    if not (FRICTION_MIN <= friction <= FRICTION_MAX):
        raise ValueError(
            f"friction out of range [{FRICTION_MIN},{FRICTION_MAX}]: {friction}"
        )
    if friction == table.breakpoints[-1]:
        return table.rates[-1]
    return table.rates[bisect_right(table.breakpoints, friction) - 1]


def rate_for_state(table: StateRateTable, state: RoadState) -> float:
    return table.rates[state]


def safety_metric(friction: float, state: RoadState, tables: RateTables) -> float:
    """Risk of a segment: friction accident rate times state accident rate."""
    return rate_for_friction(tables.friction, friction) * rate_for_state(tables.state, state)


def load_rate_tables(source: str | Path | bytes | IO[bytes] | IO[str] | dict) -> RateTables:
    """Load and validate rate tables from config JSON.

    Expected shape: ``{"friction_breakpoints": [...], "friction_rates": [...],
    "state_rates": {"Dry": ...}, "exposure_unit": "..."}``.
    """
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        raw = source.decode("utf-8") if isinstance(source, bytes) else source.read()
        doc = json.loads(raw.decode("utf-8") if isinstance(raw, bytes) else raw)

    for key in ("friction_breakpoints", "friction_rates", "state_rates"):
        if key not in doc:
            raise TableValidationError(f"rate table config missing {key!r}")
    friction = FrictionRateTable(
        breakpoints=tuple(float(b) for b in doc["friction_breakpoints"]),
        rates=tuple(float(r) for r in doc["friction_rates"]),
    )
    state_rates: dict[RoadState, float] = {}
    for name, rate in doc["state_rates"].items():
        state_rates[RoadState.from_name(name)] = float(rate)
    state = StateRateTable(rates=state_rates)
    return RateTables(
        friction=friction,
        state=state,
        exposure_unit=str(doc.get("exposure_unit", "accidents per unit exposure")),
    )


def default_rate_tables() -> RateTables:
    """The shipped sample tables (configuration defaults, not measured truth)."""
    text = resources.files("winterroute").joinpath("defaults/rate_tables.json").read_text("utf-8")
    return load_rate_tables(json.loads(text))


FeatureContext = Callable[[RoadEdge], "Sequence[float] | None"]


def make_edge_feature_context(
    feature_list: Sequence[str],
    shared_values: dict[str, float],
    graph: RoadGraph,
) -> FeatureContext:
    """Build a per-edge feature provider from region-wide context values.

    ``shared_values`` supplies one value per feature name; a missing
    ``height_m`` falls back to the mean endpoint elevation of the edge. Edges
    for which some feature has no value yield None, which routes them to the
    default condition.
    """

    def context(edge: RoadEdge) -> Sequence[float] | None:
        values: list[float] = []
        for name in feature_list:
            if name in shared_values:
                values.append(float(shared_values[name]))
            elif name == "height_m":
                start = graph.nodes[edge.from_node]
                end = graph.nodes[edge.to_node]
                values.append((start.height_m + end.height_m) / 2.0)
            else:
                return None
        return values

    return context


def assign_edge_conditions(
    graph: RoadGraph,
    aggregates: Sequence[LocationAggregate],
    model=None,
    feature_context: FeatureContext | None = None,
    snap_radius_m: float = DEFAULT_SNAP_RADIUS_M,
    state_friction: dict[RoadState, float] | None = None,
    fallback_condition: tuple[float, RoadState] = DEFAULT_FALLBACK_CONDITION,
) -> dict[int, EdgeCondition]:
    """Attach a condition estimate to every edge of the graph.

    Edges hit by at least one snapped aggregate get the observation-weighted
    mean friction and the modal state across contributing records (lower
    state code on ties), source ``measured``. Unhit edges fall back to the
    classifier when a model plus feature context is available (``predicted``,
    friction from the per-state default), else to the configured fallback
    condition (``default``). Every edge receives exactly one condition.
    """
    from .model import TrainedModel, knn_predict_state  # local import, no cycle

    friction_by_state = state_friction if state_friction is not None else DEFAULT_STATE_FRICTION
    hits: dict[int, list[LocationAggregate]] = {}
    for aggregate in aggregates:
        snapped = snap_point(graph, aggregate.cell, snap_radius_m)
        if snapped is not None:
            hits.setdefault(snapped.edge_id, []).append(aggregate)

    conditions: dict[int, EdgeCondition] = {}
    for edge_id in sorted(graph.edges):
        contributors = hits.get(edge_id)
        if contributors:
            total_obs = sum(a.n_obs for a in contributors)
            friction = sum(a.mean_friction * a.n_obs for a in contributors) / total_obs
            votes: dict[RoadState, int] = {}
            for aggregate in contributors:
                votes[aggregate.modal_state] = votes.get(aggregate.modal_state, 0) + aggregate.n_obs
            top = max(votes.values())
            state = min(s for s, v in votes.items() if v == top)
            conditions[edge_id] = EdgeCondition(edge_id, friction, state, "measured")
            continue
        if model is not None and feature_context is not None:
            assert isinstance(model, TrainedModel)
            features = feature_context(graph.edges[edge_id])
            if features is not None:
                state, _votes = knn_predict_state(model, features)
                conditions[edge_id] = EdgeCondition(
                    edge_id, friction_by_state[state], state, "predicted"
                )
                continue
        fallback_friction, fallback_state = fallback_condition
        conditions[edge_id] = EdgeCondition(edge_id, fallback_friction, fallback_state, "default")
    return conditions
