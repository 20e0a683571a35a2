"""HTTP service over an immutable snapshot: /health, /route, /network, /predict.

Handlers are plain (non-async) functions so FastAPI runs them on its thread
pool; the snapshot is never mutated, so concurrent route queries need no
locking. Data updates happen by rebuilding the snapshot and restarting.
"""

from __future__ import annotations

import errno
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import ServerConfig
from .pipeline import (
    EndpointSnapError,
    NoPathError,
    Snapshot,
    network_geojson,
    plan_route,
    predict_response,
    route_to_json,
)


class QueryError(ValueError):
    """Malformed query parameters; rendered as HTTP 400."""


def _float_param(request: Request, name: str) -> float:
    raw = request.query_params.get(name)
    if raw is None:
        raise QueryError(f"missing query parameter {name!r}")
    try:
        return float(raw)
    except ValueError:
        raise QueryError(f"query parameter {name!r} must be a number") from None


def create_app(snapshot: Snapshot, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="winterroute", version="0.1.0")

    @app.exception_handler(QueryError)
    def handle_query_error(_request: Request, exc: QueryError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(EndpointSnapError)
    def handle_snap_error(_request: Request, exc: EndpointSnapError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(NoPathError)
    def handle_no_path(_request: Request, _exc: NoPathError) -> JSONResponse:
        return JSONResponse(status_code=404, content={"error": "no_path"})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/route")
    def route(request: Request) -> JSONResponse:
        origin = (_float_param(request, "from_lat"), _float_param(request, "from_lon"))
        destination = (_float_param(request, "to_lat"), _float_param(request, "to_lon"))
        raw_alpha = request.query_params.get("alpha")
        if raw_alpha is None:
            alpha = snapshot.default_alpha
        else:
            try:
                alpha = float(raw_alpha)
            except ValueError:
                raise QueryError("query parameter 'alpha' must be a number") from None
        if alpha < 0.0:
            raise QueryError("alpha must be non-negative")
        planned = plan_route(snapshot, origin, destination, alpha)
        return JSONResponse(content=route_to_json(snapshot, planned, alpha))

    @app.get("/network")
    def network() -> JSONResponse:
        return JSONResponse(content=network_geojson(snapshot))

    @app.post("/predict")
    def predict(body: dict) -> JSONResponse:
        features = body.get("features")
        if not isinstance(features, dict):
            raise QueryError("body must be {\"features\": {name: value}}")
        try:
            cleaned = {str(k): float(v) for k, v in features.items()}
        except (TypeError, ValueError):
            raise QueryError("feature values must be numeric") from None
        if snapshot.classifier is None or snapshot.regressor is None:
            return JSONResponse(status_code=503, content={"error": "no trained models loaded"})
        try:
            return JSONResponse(content=predict_response(snapshot, cleaned))
        except ValueError as exc:
            raise QueryError(str(exc)) from None

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")
    return app


def serve(snapshot: Snapshot, server: ServerConfig) -> int:
    """Run uvicorn until interrupted; returns a process exit code."""
    import uvicorn

    app = create_app(snapshot, server.static_dir)
    try:
        uvicorn.run(app, host=server.host, port=server.port, log_level="info")
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            print(f"error: port {server.port} is already in use")
            return 1
        raise
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0
