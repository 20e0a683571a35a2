"""Command line interface: ingest, build-graph, train, evaluate, assign, route, serve.

All commands print JSON on stdout. Exit codes: 0 success, 1 operational
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .config import AppConfig, load_app_config
from .model import DEFAULT_FEATURES, DEFAULT_K, evaluate_classifier, evaluate_regressor, load_model
from .pipeline import (
    EndpointSnapError,
    NoPathError,
    build_conditions,
    build_dataset,
    build_snapshot,
    ingest_sensors,
    ingest_summary,
    load_graph,
    load_tables,
    plan_route,
    route_to_json,
    save_conditions,
    train_models,
    write_models,
)
from .roadgraph import export_edges_csv
from .safety import safety_metric


def _parse_latlon(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected lat,lon")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError("expected numeric lat,lon") from None


def _parse_bbox(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected min_lat,min_lon,max_lat,max_lon")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise argparse.ArgumentTypeError("expected numeric bbox") from None


def _config_from_args(args: argparse.Namespace) -> AppConfig:
    """Start from --config if given, then apply per-command flag overrides."""
    config = load_app_config(args.config) if getattr(args, "config", None) else AppConfig()
    overrides = {}
    for flag, key in (
        ("sensors", "sensor_csv"),
        ("mapping", "sensor_mapping"),
        ("weather", "weather_csv"),
        ("osm", "osm_xml"),
        ("edges", "edges_csv"),
        ("conditions", "conditions_json"),
        ("rates", "rate_tables"),
        ("classifier", "classifier_model"),
        ("regressor", "regressor_model"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = str(value)
    for flag in ("k", "test_fraction", "seed", "fallback_mode", "snap_radius_m"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    features = getattr(args, "features", None)
    if features is not None:
        overrides["feature_list"] = tuple(f.strip() for f in features.split(",") if f.strip())
    return dataclasses.replace(config, **overrides)


def _emit(doc) -> None:
    print(json.dumps(doc, sort_keys=True))


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    records, errors, aggregates = ingest_sensors(config)
    _emit(ingest_summary(records, errors, aggregates))
    return 0


def cmd_build_graph(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    if config.edges_csv is None and config.osm_xml is None:
        print("build-graph needs --osm or --edges", file=sys.stderr)
        return 2
    if config.osm_xml and args.bbox:
        from .roadgraph import parse_osm_xml

        graph = parse_osm_xml(config.osm_xml, bbox=args.bbox)
    else:
        graph = load_graph(config)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        export_edges_csv(graph, fh)
    _emit(
        {
            "nodes": len(graph.nodes),
            "edges": len(graph.edges),
            "skipped_ways": len(graph.skipped_ways),
            "out": str(args.out),
        }
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    result = train_models(config)
    write_models(result, args.out_classifier, args.out_regressor)
    _emit(
        {
            "rows": result.n_rows,
            "unmatched": result.n_unmatched,
            "classifier": result.classifier_report.to_dict(),
            "regressor": result.regressor_report.to_dict(),
            "classifier_file": str(args.out_classifier),
            "regressor_file": str(args.out_regressor),
        }
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    model = load_model(args.model)
    config = dataclasses.replace(config, feature_list=model.feature_list)
    rows, _unmatched = build_dataset(config)
    if not rows:
        print("no feature rows to evaluate on", file=sys.stderr)
        return 1

    def evaluate(candidate):
        if candidate.task == "classify":
            return evaluate_classifier(candidate, rows)
        tables = load_tables(config)
        targets = [safety_metric(r.label_friction, r.label_state, tables) for r in rows]
        return evaluate_regressor(candidate, rows, targets)

    if args.k_sweep:
        ks = [int(part) for part in args.k_sweep.split(",") if part.strip()]
        if not ks:
            print("--k-sweep needs at least one k", file=sys.stderr)
            return 2
        sweep = []
        for k in ks:
            report = evaluate(dataclasses.replace(model, k=k))
            sweep.append({"k": k, **report.to_dict()})
        _emit({"k_sweep": sweep})
        return 0

    report = evaluate(model)
    _emit(report.to_dict())
    if args.table:
        print(report.to_text_table(), file=sys.stderr)
    return 0


def cmd_assign(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    graph = load_graph(config)
    classifier = None
    if config.classifier_model and Path(config.classifier_model).exists():
        classifier = load_model(config.classifier_model)
    shared_context = None
    if args.context:
        with open(args.context, "r", encoding="utf-8") as fh:
            shared_context = {str(k): float(v) for k, v in json.load(fh).items()}
    conditions = build_conditions(config, graph, classifier, shared_context)
    save_conditions(conditions, args.out)
    by_source: dict[str, int] = {}
    for condition in conditions.values():
        by_source[condition.source] = by_source.get(condition.source, 0) + 1
    _emit({"edges": len(conditions), "by_source": by_source, "out": str(args.out)})
    return 0


def cmd_route(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    snapshot = build_snapshot(config)
    alpha = args.alpha if args.alpha is not None else snapshot.default_alpha
    try:
        route = plan_route(snapshot, args.from_point, args.to_point, alpha)
    except NoPathError:
        _emit({"error": "no_path"})
        return 1
    except EndpointSnapError as exc:
        _emit({"error": f"endpoint_snap: {exc}"})
        return 1
    _emit(route_to_json(snapshot, route, alpha))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    snapshot = build_snapshot(config)
    from .server import serve

    return serve(snapshot, config.server)


def cmd_version(_args: argparse.Namespace) -> int:
    _emit({"version": __version__})
    return 0


def _add_io_flags(parser: argparse.ArgumentParser, *flags: str) -> None:
    table = {
        "sensors": ("--sensors", "sensor CSV path"),
        "mapping": ("--mapping", "column mapping JSON path"),
        "weather": ("--weather", "weather CSV path"),
        "osm": ("--osm", "OSM XML path"),
        "edges": ("--edges", "edge-list CSV path"),
        "conditions": ("--conditions", "edge conditions JSON path"),
        "rates": ("--rates", "rate tables JSON path"),
        "classifier": ("--classifier", "classifier model path"),
        "regressor": ("--regressor", "regressor model path"),
    }
    for name in flags:
        flag, help_text = table[name]
        parser.add_argument(flag, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="winterroute",
        description="Road-condition-aware route planning for winter road networks",
    )
    parser.add_argument("--config", help="app config JSON path")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and validate a sensor CSV")
    _add_io_flags(p, "sensors", "mapping")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-graph", help="build a road graph and export edge CSV")
    _add_io_flags(p, "osm", "edges")
    p.add_argument("--bbox", type=_parse_bbox, help="min_lat,min_lon,max_lat,max_lon")
    p.add_argument("--out", required=True, help="output edge CSV path")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="train the state classifier and risk regressor")
    _add_io_flags(p, "sensors", "mapping", "weather", "rates")
    p.add_argument("--features", help="comma-separated feature names")
    p.add_argument("--k", type=int)
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-classifier", required=True)
    p.add_argument("--out-regressor", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a saved model on a dataset")
    _add_io_flags(p, "sensors", "mapping", "weather", "rates")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--table", action="store_true", help="also print an aligned text table")
    p.add_argument("--k-sweep", dest="k_sweep", help="comma-separated k values to compare")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("assign", help="assign per-edge conditions from sensor data")
    _add_io_flags(p, "osm", "edges", "sensors", "mapping", "rates", "classifier")
    p.add_argument("--fallback-mode", dest="fallback_mode", choices=("optimistic", "pessimistic"))
    p.add_argument(
        "--context",
        help="JSON file of region-wide feature values letting the classifier cover unmeasured edges",
    )
    p.add_argument("--out", required=True, help="output conditions JSON path")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("route", help="plan a route between two coordinates")
    _add_io_flags(p, "osm", "edges", "conditions", "sensors", "mapping", "rates")
    p.add_argument("--from", dest="from_point", type=_parse_latlon, required=True, metavar="LAT,LON")
    p.add_argument("--to", dest="to_point", type=_parse_latlon, required=True, metavar="LAT,LON")
    p.add_argument("--alpha", type=float, help="time-vs-safety tradeoff (0 = fastest)")
    p.add_argument("--snap-radius-m", dest="snap_radius_m", type=float)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("serve", help="serve the routing API over HTTP")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("version", help="print the package version")
    p.set_defaults(func=cmd_version)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help.
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NoPathError, EndpointSnapError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
