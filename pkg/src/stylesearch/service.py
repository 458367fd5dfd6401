"""HTTP facade over the retrieval engine.

Request bodies are validated by hand so the error contract stays explicit:
400 malformed request, 404 unknown item, 409 method unavailable, 422 feature
dimension mismatch.  Every error body has the shape
``{"error": {"code": ..., "message": ...}}``.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .blend import BlendParams, ResultList
from .engine import (
    METHODS,
    BadQueryError,
    DimensionMismatchError,
    Engine,
    EngineError,
    MethodUnavailableError,
    UnknownItemError,
)

MAX_K = 50
DEFAULT_PAGE_SIZE = 24


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def _engine_error(exc: EngineError) -> JSONResponse:
    if isinstance(exc, UnknownItemError):
        return _error(404, "unknown_item", str(exc))
    if isinstance(exc, MethodUnavailableError):
        return _error(409, "method_unavailable", str(exc))
    if isinstance(exc, DimensionMismatchError):
        return _error(422, "dimension_mismatch", str(exc))
    return _error(400, "bad_request", str(exc))


def _item_payload(engine: Engine, item_id: str) -> dict:
    item = engine.catalog.items[item_id]
    return {
        "id": item.id,
        "category": item.category,
        "name": item.name,
        "description": item.description,
        "image_url": item.image_url,
        "set_ids": list(item.set_ids),
        "has_features": item_id in engine.features,
    }


def _result_payload(engine: Engine, result: ResultList) -> list[dict]:
    payload = []
    for entry in result.entries:
        item = engine.catalog.items.get(entry.item_id)
        payload.append(
            {
                "id": entry.item_id,
                "category": item.category if item else None,
                "name": item.name if item else None,
                "description": item.description if item else None,
                "score": entry.score,
                "provenance": entry.provenance,
            }
        )
    return payload


def create_app(engine: Engine, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="stylesearch", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(400, "bad_request", "malformed query parameters")

    @app.exception_handler(EngineError)
    async def on_engine_error(request: Request, exc: EngineError):
        return _engine_error(exc)

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "items": len(engine.catalog.items),
            "sets": len(engine.catalog.sets),
            "feature_dim": engine.catalog.feature_dim,
            "methods": engine.available(),
            "fingerprints": engine.fingerprints,
        }

    @app.get("/api/methods")
    def methods():
        ready = engine.available()
        return {"methods": [{"name": m, "ready": ready[m]} for m in METHODS]}

    @app.get("/api/items/{item_id}")
    def item_detail(item_id: str):
        if item_id not in engine.catalog.items:
            return _error(404, "unknown_item", f"unknown item id {item_id!r}")
        return _item_payload(engine, item_id)

    @app.get("/api/items")
    def item_listing(category: str | None = None, page: int = 1, page_size: int = DEFAULT_PAGE_SIZE):
        if page < 1:
            return _error(400, "bad_request", f"page must be >= 1, got {page}")
        page_size = max(1, min(page_size, 100))
        ids = engine.catalog.item_ids()
        if category is not None:
            ids = [i for i in ids if engine.catalog.items[i].category == category]
        total = len(ids)
        pages = max(1, -(-total // page_size))
        start = (page - 1) * page_size
        return {
            "items": [_item_payload(engine, i) for i in ids[start : start + page_size]],
            "total": total,
            "page": page,
            "pages": pages,
            "page_size": page_size,
            "categories": list(engine.catalog.categories),
        }

    @app.post("/api/query")
    async def query(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "request body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "bad_request", "request body must be a JSON object")

        item_id = body.get("item_id")
        features = body.get("features")
        text = body.get("text", "")
        method = body.get("method", "early")
        k = body.get("k", 4)
        raw_params = body.get("params")

        if item_id is not None and not isinstance(item_id, str):
            return _error(400, "bad_request", "item_id must be a string")
        if features is not None and not isinstance(features, list):
            return _error(400, "bad_request", "features must be a list of numbers")
        if not isinstance(text, str):
            return _error(400, "bad_request", "text must be a string")
        if not isinstance(method, str):
            return _error(400, "bad_request", "method must be a string")
        if isinstance(k, bool) or not isinstance(k, int) or not 1 <= k <= MAX_K:
            return _error(400, "bad_request", f"k must be an integer in [1, {MAX_K}]")

        params = None
        if raw_params is not None:
            if not isinstance(raw_params, dict):
                return _error(400, "bad_request", "params must be an object")
            try:
                params = BlendParams(
                    n1=int(raw_params.get("n1", 3)), n2=int(raw_params.get("n2", 4))
                )
            except (TypeError, ValueError) as exc:
                return _error(400, "bad_request", f"bad blend params: {exc}")

        started = time.perf_counter()
        try:
            q = engine.resolve_query(item_id=item_id, features=features, text=text)
            result = engine.run(q, method, k, params=params)
        except EngineError as exc:
            return _engine_error(exc)
        except ValueError as exc:
            return _error(400, "bad_request", str(exc))
        return {
            "method": method,
            "k": k,
            "item_id": item_id,
            "text": text,
            "warnings": result.warnings,
            "timing_ms": (time.perf_counter() - started) * 1000.0,
            "results": _result_payload(engine, result),
        }

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
