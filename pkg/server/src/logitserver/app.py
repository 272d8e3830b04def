"""HTTP surface: /info, /tokenize, /detokenize, /logprobs, /logprobs_batch.

Log-probability vectors travel as JSON float lists by default; requests
whose Accept header includes "application/x-logprobs-b64" get base64-encoded
little-endian float32 instead, which cuts payloads roughly 5x for
50k-vocabulary models.
"""

from __future__ import annotations

import base64
from contextlib import asynccontextmanager

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from .model import ContextOverflow, ModelRunner, ServerConfig

ACCEPT_B64 = "application/x-logprobs-b64"


class TokenizeRequest(BaseModel):
    text: str
    in_continuation: bool = False


class DetokenizeRequest(BaseModel):
    token_ids: list[int]


class LogprobsRequest(BaseModel):
    prefix_ids: list[int]
    restrict_ids: list[int] | None = None


class BatchRequest(BaseModel):
    items: list[LogprobsRequest] = Field(max_length=256)


def _vector_payload(vec: np.ndarray, accept: str) -> dict:
    if ACCEPT_B64 in accept:
        raw = np.asarray(vec, dtype="<f4").tobytes()
        return {"logprobs_b64": base64.b64encode(raw).decode("ascii")}
    return {"logprobs": [float(v) for v in vec]}


def create_app(cfg: ServerConfig) -> FastAPI:
    """App with the model loaded on startup; endpoints 503 until ready."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.runner = ModelRunner(cfg)
        yield

    app = FastAPI(title="logitserver", lifespan=lifespan)
    app.state.runner = None

    def runner() -> ModelRunner:
        r = app.state.runner
        if r is None:
            raise HTTPException(status_code=503, detail="model not ready")
        return r

    def score(r: ModelRunner, req: LogprobsRequest) -> np.ndarray:
        try:
            return r.next_token_logprobs(req.prefix_ids, req.restrict_ids)
        except ContextOverflow as e:
            raise HTTPException(status_code=413, detail=str(e))
        except ValueError as e:
            raise HTTPException(status_code=400, detail=str(e))

    @app.get("/info")
    def info():
        r = runner()
        return {
            "model_id": r.cfg.model_id,
            "vocab_size": r.vocab_size,
            "context_limit": r.context_limit,
            "delimiter_token_ids": r.delimiter_token_ids,
        }

    @app.post("/tokenize")
    def tokenize(req: TokenizeRequest):
        r = runner()
        if not req.text:
            raise HTTPException(status_code=400, detail="text is empty")
        try:
            ids = r.tokenize(req.text, req.in_continuation)
        except ValueError as e:
            raise HTTPException(status_code=400, detail=str(e))
        if len(ids) > r.context_limit:
            raise HTTPException(
                status_code=413,
                detail=f"text tokenizes to {len(ids)} ids, over the "
                       f"context limit {r.context_limit}",
            )
        return {"token_ids": ids}

    @app.post("/detokenize")
    def detokenize(req: DetokenizeRequest):
        r = runner()
        if any(not 0 <= t < r.vocab_size for t in req.token_ids):
            raise HTTPException(status_code=400, detail="token id out of range")
        return {"text": r.detokenize(req.token_ids)}

    @app.post("/logprobs")
    def logprobs(req: LogprobsRequest, request: Request):
        vec = score(runner(), req)
        return _vector_payload(vec, request.headers.get("accept", ""))

    @app.post("/logprobs_batch")
    def logprobs_batch(req: BatchRequest, request: Request):
        r = runner()
        accept = request.headers.get("accept", "")
        return {"results": [_vector_payload(score(r, item), accept)
                            for item in req.items]}

    return app
