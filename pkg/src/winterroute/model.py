"""k-nearest-neighbors road state classifier and risk regressor.

Features are standardized (population mean/stddev) before Euclidean
distances are taken. The neighbor set is the k nearest stored points, with
every point tied at the k-th distance admitted, which keeps predictions
independent of training point order. Models persist as versioned JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Any, Sequence

import numpy as np

from .ingest import RoadState
from .weather import FeatureRow

MODEL_FORMAT = "winterroute-knn"
MODEL_FORMAT_VERSION = 1

DEFAULT_K = 5
DEFAULT_FEATURES = ("ta_c", "tsurf_c", "water_mm", "speed", "height_m")

_MASK64 = (1 << 64) - 1


class ModelFormatError(ValueError):
    """A persisted model document is malformed or from an unknown version."""


@dataclass(frozen=True)
class Standardizer:
    mean: tuple[float, ...]
    std: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.mean) != len(self.std):
            raise ValueError("mean and std must have identical length")
        if any(s <= 0.0 for s in self.std):
            raise ValueError("std entries must be strictly positive")

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - np.asarray(self.mean)) / np.asarray(self.std)


@dataclass(frozen=True)
class TrainedModel:
    feature_list: tuple[str, ...]
    standardizer: Standardizer
    points: np.ndarray  # standardized, shape (n, len(feature_list))
    labels: np.ndarray | None  # state codes, classification task
    targets: np.ndarray | None  # numeric targets, regression task
    k: int
    task: str  # "classify" | "regress"
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.task not in ("classify", "regress"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ValueError("model must store at least one training point")
        if self.points.shape[1] != len(self.feature_list):
            raise ValueError("stored vectors do not match feature_list width")
        if self.task == "classify" and self.labels is None:
            raise ValueError("classification model needs labels")
        if self.task == "regress" and self.targets is None:
            raise ValueError("regression model needs targets")


@dataclass(frozen=True)
class EvalReport:
    task: str
    n_test: int
    confusion: tuple[tuple[int, ...], ...] | None = None
    accuracy: float | None = None
    macro_f1: float | None = None
    mae: float | None = None
    rmse: float | None = None

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"task": self.task, "n_test": self.n_test}
        if self.task == "classify":
            doc["confusion"] = [list(row) for row in self.confusion or ()]
            doc["accuracy"] = self.accuracy
            doc["macro_f1"] = self.macro_f1
        else:
            doc["mae"] = self.mae
            doc["rmse"] = self.rmse
        return doc

    def to_text_table(self) -> str:
        if self.task == "regress":
            rows = [("n_test", str(self.n_test)), ("mae", f"{self.mae:.6f}"), ("rmse", f"{self.rmse:.6f}")]
            width = max(len(k) for k, _ in rows)
            return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)
        labels = [s.label for s in RoadState]
        width = max(max(len(l) for l in labels), 6)
        header = " " * (width + 2) + "  ".join(f"{l:>{width}}" for l in labels)
        lines = [header]
        for state, row in zip(RoadState, self.confusion or ()):
            cells = "  ".join(f"{c:>{width}}" for c in row)
            lines.append(f"{state.label:<{width}}  {cells}")
        lines.append(f"accuracy  {self.accuracy:.4f}")
        lines.append(f"macro_f1  {self.macro_f1:.4f}")
        lines.append(f"n_test    {self.n_test}")
        return "\n".join(lines)


def _vectors(rows: Sequence[FeatureRow] | Sequence[Sequence[float]]) -> np.ndarray:
    data = [row.features if isinstance(row, FeatureRow) else tuple(row) for row in rows]
    matrix = np.asarray(data, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("rows must form a rectangular matrix")
    return matrix


def fit_standardizer(rows: Sequence[FeatureRow] | Sequence[Sequence[float]]) -> Standardizer:
    """Per-feature mean and population stddev; constant features get stddev 1."""
    if len(rows) == 0:
        raise ValueError("cannot fit a standardizer on no rows")
    matrix = _vectors(rows)
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)  # population stddev (ddof=0)
    std = np.where(std == 0.0, 1.0, std)
    return Standardizer(mean=tuple(float(v) for v in mean), std=tuple(float(v) for v in std))


def train_model(
    rows: Sequence[FeatureRow],
    feature_list: Sequence[str],
    k: int = DEFAULT_K,
    task: str = "classify",
    targets: Sequence[float] | None = None,
    seed: int = 0,
) -> TrainedModel:
    """Fit a model on labeled feature rows.

    For regression, ``targets`` supplies the numeric target per row (the
    routing pipeline passes the risk metric computed from each row's measured
    friction and state).
    """
    if not rows:
        raise ValueError("cannot train on an empty dataset")
    matrix = _vectors(rows)
    if matrix.shape[1] != len(feature_list):
        raise ValueError("row width does not match feature_list")
    standardizer = fit_standardizer(rows)
    points = standardizer.transform(matrix)

    labels: np.ndarray | None = None
    if task == "classify":
        codes = []
        for row in rows:
            if row.label_state is None:
                raise ValueError("classification requires label_state on every row")
            codes.append(int(row.label_state))
        labels = np.asarray(codes, dtype=int)

    target_array: np.ndarray | None = None
    if task == "regress":
        if targets is None:
            raise ValueError("regression requires targets")
        if len(targets) != len(rows):
            raise ValueError("targets length does not match rows")
        target_array = np.asarray(targets, dtype=float)

    return TrainedModel(
        feature_list=tuple(feature_list),
        standardizer=standardizer,
        points=points,
        labels=labels,
        targets=target_array,
        k=k,
        task=task,
        metadata={
            "created_at": datetime.now(timezone.utc).isoformat(),
            "training_row_count": len(rows),
            "seed": seed,
        },
    )


def _neighbor_mask(model: TrainedModel, x: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    query = np.asarray(tuple(x), dtype=float)
    if query.shape != (len(model.feature_list),):
        raise ValueError(
            f"query width {query.shape} does not match feature_list ({len(model.feature_list)})"
        )
    q = model.standardizer.transform(query)
    distances = np.sqrt(((model.points - q) ** 2).sum(axis=1))
    k = min(model.k, distances.shape[0])
    kth = np.partition(distances, k - 1)[k - 1]
    # Everything tied at the k-th distance is admitted.
    return distances <= kth, distances


def knn_predict_state(model: TrainedModel, x: Sequence[float]) -> tuple[RoadState, dict[RoadState, int]]:
    """Majority vote over the neighbor set.

    Vote ties are broken by the state of the single nearest neighbor among
    the tied classes, then by the lower state code; both rules are
    independent of training point order.
    """
    if model.task != "classify":
        raise ValueError("model was not trained for classification")
    mask, distances = _neighbor_mask(model, x)
    assert model.labels is not None
    neighbor_labels = model.labels[mask]
    neighbor_distances = distances[mask]

    votes: dict[RoadState, int] = {}
    for code in neighbor_labels:
        state = RoadState(int(code))
        votes[state] = votes.get(state, 0) + 1
    top = max(votes.values())
    tied = [s for s, v in votes.items() if v == top]
    if len(tied) == 1:
        return tied[0], votes
    tied_set = {int(s) for s in tied}
    best_distance = min(
        d for d, c in zip(neighbor_distances, neighbor_labels) if int(c) in tied_set
    )
    closest_codes = {
        int(c)
        for d, c in zip(neighbor_distances, neighbor_labels)
        if d == best_distance and int(c) in tied_set
    }
    return RoadState(min(closest_codes)), votes


def knn_predict_value(model: TrainedModel, x: Sequence[float]) -> float:
    """Mean target over the neighbor set (same neighbor rules as classification)."""
    if model.task != "regress":
        raise ValueError("model was not trained for regression")
    mask, _distances = _neighbor_mask(model, x)
    assert model.targets is not None
    return float(model.targets[mask].mean())


def _mix64(value: int) -> int:
    """splitmix64 finalizer; documented so other languages reproduce splits."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def split_rank(seed: int, index: int) -> int:
    """Rank of a row in the deterministic split: mix64(mix64(seed) xor index)."""
    return _mix64(_mix64(seed & _MASK64) ^ (index & _MASK64))


def split_dataset(rows: Sequence, test_fraction: float, seed: int) -> tuple[list, list]:
    """Deterministic train/test split by hashing (seed, row index).

    Rows are ranked by :func:`split_rank`; the ``ceil(n * test_fraction)``
    highest ranks form the test set. Both halves preserve input order.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must be in (0, 1)")
    if len(rows) < 2:
        raise ValueError("need at least 2 rows to split")
    n = len(rows)
    n_test = math.ceil(n * test_fraction)
    ranked = sorted(range(n), key=lambda i: (split_rank(seed, i), i), reverse=True)
    test_indices = set(ranked[:n_test])
    train = [rows[i] for i in range(n) if i not in test_indices]
    test = [rows[i] for i in range(n) if i in test_indices]
    return train, test


def evaluate_classifier(model: TrainedModel, rows: Sequence[FeatureRow]) -> EvalReport:
    """Confusion matrix (actual x predicted), accuracy and macro-F1.

    Macro-F1 averages per-class F1 over the classes present in the test set;
    a class with zero precision+recall contributes 0.
    """
    if not rows:
        raise ValueError("cannot evaluate on an empty test set")
    confusion = [[0] * 6 for _ in range(6)]
    for row in rows:
        if row.label_state is None:
            raise ValueError("evaluation rows must be labeled")
        predicted, _votes = knn_predict_state(model, row.features)
        confusion[int(row.label_state) - 1][int(predicted) - 1] += 1

    n = len(rows)
    accuracy = sum(confusion[i][i] for i in range(6)) / n
    f1_values = []
    for i in range(6):
        actual_count = sum(confusion[i])
        if actual_count == 0:
            continue
        tp = confusion[i][i]
        fp = sum(confusion[r][i] for r in range(6)) - tp
        fn = actual_count - tp
        precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
        recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
        f1 = 0.0 if (precision + recall) == 0.0 else 2 * precision * recall / (precision + recall)
        f1_values.append(f1)
    macro_f1 = sum(f1_values) / len(f1_values) if f1_values else 0.0
    return EvalReport(
        task="classify",
        n_test=n,
        confusion=tuple(tuple(row) for row in confusion),
        accuracy=accuracy,
        macro_f1=macro_f1,
    )


def evaluate_regressor(
    model: TrainedModel,
    rows: Sequence[FeatureRow],
    targets: Sequence[float],
) -> EvalReport:
    if not rows:
        raise ValueError("cannot evaluate on an empty test set")
    if len(targets) != len(rows):
        raise ValueError("targets length does not match rows")
    errors = [knn_predict_value(model, row.features) - float(t) for row, t in zip(rows, targets)]
    mae = sum(abs(e) for e in errors) / len(errors)
    rmse = math.sqrt(sum(e * e for e in errors) / len(errors))
    return EvalReport(task="regress", n_test=len(rows), mae=mae, rmse=rmse)


def save_model(model: TrainedModel, sink: str | Path | IO[str]) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "feature_list": list(model.feature_list),
        "standardizer": {"mean": list(model.standardizer.mean), "std": list(model.standardizer.std)},
        "points": [list(map(float, row)) for row in model.points],
        "labels": [int(c) for c in model.labels] if model.labels is not None else None,
        "targets": [float(t) for t in model.targets] if model.targets is not None else None,
        "k": model.k,
        "task": model.task,
        "metadata": model.metadata,
    }
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
    else:
        json.dump(doc, sink)


def load_model(source: str | Path | bytes | IO[bytes] | IO[str]) -> TrainedModel:
    """Load a model document produced by :func:`save_model`.

    Raises :class:`ModelFormatError` naming the offending field on any
    version or schema violation.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    if doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"field 'format': expected {MODEL_FORMAT!r}")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"field 'version': expected {MODEL_FORMAT_VERSION}, got {doc.get('version')!r}"
        )
    try:
        k = int(doc["k"])
    except (KeyError, TypeError, ValueError):
        raise ModelFormatError("field 'k': missing or not an integer") from None
    if k < 1:
        raise ModelFormatError("field 'k': k must be at least 1 (k >= 1)")
    task = doc.get("task")
    if task not in ("classify", "regress"):
        raise ModelFormatError(f"field 'task': unknown task {task!r}")
    try:
        feature_list = tuple(str(f) for f in doc["feature_list"])
        standardizer = Standardizer(
            mean=tuple(float(v) for v in doc["standardizer"]["mean"]),
            std=tuple(float(v) for v in doc["standardizer"]["std"]),
        )
        points = np.asarray(doc["points"], dtype=float)
        labels = np.asarray(doc["labels"], dtype=int) if doc.get("labels") is not None else None
        targets = np.asarray(doc["targets"], dtype=float) if doc.get("targets") is not None else None
        metadata = dict(doc.get("metadata") or {})
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model field: {exc}") from exc
    try:
        return TrainedModel(
            feature_list=feature_list,
            standardizer=standardizer,
            points=points,
            labels=labels,
            targets=targets,
            k=k,
            task=task,
            metadata=metadata,
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc
