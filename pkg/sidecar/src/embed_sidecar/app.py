"""The wire protocol:

POST /embed  {"texts": [<string>, ...]}
  -> 200 {"embeddings": [[<number>, ...], ...], "dim": <int>, "model": <string>}
  -> 400 malformed request, 413 batch too large, 500 inference failure
GET /health
  -> 200 {"status": "ok", "dim": <int>}

Responses preserve request order and are independent of request
interleaving (the encoder runs in inference mode with no sampling).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

DEFAULT_BATCH_LIMIT = 256


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(encoder, batch_limit: int = DEFAULT_BATCH_LIMIT) -> FastAPI:
    app = FastAPI(title="embed-sidecar", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_request(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": f"malformed request: {exc.errors()[:3]}"})

    @app.get("/health")
    def health():
        return {"status": "ok", "dim": encoder.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        if len(request.texts) > batch_limit:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {len(request.texts)} exceeds limit {batch_limit}"},
            )
        try:
            vectors = encoder.encode(request.texts)
        except Exception as exc:  # surfaced to the client with a message
            return JSONResponse(status_code=500, content={"error": f"inference failed: {exc}"})
        if vectors.shape != (len(request.texts), encoder.dim):
            return JSONResponse(
                status_code=500,
                content={"error": f"encoder returned shape {vectors.shape}, expected ({len(request.texts)}, {encoder.dim})"},
            )
        return {
            "embeddings": [row.tolist() for row in vectors],
            "dim": encoder.dim,
            "model": encoder.name,
        }

    return app
