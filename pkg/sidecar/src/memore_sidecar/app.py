"""HTTP surface: POST /v1/score and GET /v1/health over the shared wire protocol."""

from __future__ import annotations

import os
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from memore.core import Modality
from memore.protocol import (
    PROTOCOL_VERSION,
    ProtocolViolation,
    validate_score_request,
    validate_score_response,
)

from .model import EmotionModel, load_model_from_env

PORT_ENV = "MEMORE_SIDECAR_PORT"
DEFAULT_PORT = 8790

SERVED_MODALITIES = tuple(m.value for m in Modality)


def create_app(model: Optional[EmotionModel] = None, *, resolve_env: bool = True) -> FastAPI:
    """Build the app around a model; with resolve_env, a missing model is
    resolved from the environment (stub by default). Pass resolve_env=False to
    serve with no model loaded (health and score answer 503)."""
    if model is None and resolve_env:
        model = load_model_from_env()
    app = FastAPI(title="memore-sidecar")
    app.state.model = model

    @app.get("/v1/health")
    def health():
        m: Optional[EmotionModel] = app.state.model
        if m is None:
            return JSONResponse({"error_code": "model_not_loaded"}, status_code=503)
        return {
            "status": "ok",
            "model_id": m.model_id,
            "modalities": list(SERVED_MODALITIES),
        }

    @app.post("/v1/score")
    async def score(request: Request):
        m: Optional[EmotionModel] = app.state.model
        if m is None:
            return JSONResponse({"error_code": "model_not_loaded"}, status_code=503)
        try:
            body = await request.json()
        except ValueError:
            return JSONResponse(
                {"error_code": "schema_violation", "message": "body is not JSON"},
                status_code=422,
            )
        try:
            validate_score_request(body)
        except ProtocolViolation as e:
            return JSONResponse(
                {"error_code": e.error_code, "message": str(e)}, status_code=422
            )
        session_id = body["session_id"]
        segment_id = body["segment_id"]
        names = sorted(body["modalities"])
        response = {
            "protocol_version": PROTOCOL_VERSION,
            "segment_id": segment_id,
            "model_id": m.model_id,
            "distributions": {
                name: m.score(session_id, segment_id, name) for name in names
            },
            "latency_ms": m.latency_ms,
        }
        validate_score_response(response)
        return response

    return app


def main() -> None:
    import uvicorn

    port = int(os.environ.get(PORT_ENV, DEFAULT_PORT))
    uvicorn.run(create_app(), host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
