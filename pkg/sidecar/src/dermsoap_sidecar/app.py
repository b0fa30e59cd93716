"""FastAPI application exposing /embed, /embed_tokens, /generate, /health."""

from __future__ import annotations

from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import SidecarConfig, load_config
from .encoders import build_encoder
from .generators import build_generator


class EmbedRequest(BaseModel):
    texts: list[str]


class EmbedTokensRequest(BaseModel):
    text: str


class GenerateRequest(BaseModel):
    system: str = ""
    user: str
    image_ref: Optional[str] = None


def create_app(config: Optional[SidecarConfig] = None) -> FastAPI:
    config = config or load_config()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.encoder = build_encoder(config)
        app.state.generator = build_generator(config)
        yield

    app = FastAPI(title="dermsoap-sidecar", version="0.1.0", lifespan=lifespan)
    app.state.config = config
    app.state.encoder = None
    app.state.generator = None

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def not_ready() -> Optional[JSONResponse]:
        if app.state.encoder is None or app.state.generator is None:
            return JSONResponse(status_code=503, content={"error": "models loading"})
        return None

    @app.get("/health")
    def health():
        loading = not_ready()
        if loading is not None:
            return loading
        encoder = app.state.encoder
        return {
            "status": "ok",
            "dim": encoder.dim,
            "pooling": encoder.pooling,
            "encoder": encoder.name,
            "generator": app.state.generator.name,
        }

    @app.post("/embed")
    def embed(body: EmbedRequest):
        loading = not_ready()
        if loading is not None:
            return loading
        if len(body.texts) > config.max_batch_size:
            return JSONResponse(
                status_code=400,
                content={
                    "error": f"batch of {len(body.texts)} exceeds max {config.max_batch_size}"
                },
            )
        encoder = app.state.encoder
        vectors = encoder.encode_texts(body.texts)
        return {"dim": encoder.dim, "vectors": [row.tolist() for row in vectors]}

    @app.post("/embed_tokens")
    def embed_tokens(body: EmbedTokensRequest):
        loading = not_ready()
        if loading is not None:
            return loading
        encoder = app.state.encoder
        tokens, vectors = encoder.encode_tokens(body.text)
        return {"tokens": tokens, "vectors": [row.tolist() for row in vectors]}

    @app.post("/generate")
    def generate(body: GenerateRequest):
        loading = not_ready()
        if loading is not None:
            return loading
        text = app.state.generator.generate(body.system, body.user, body.image_ref)
        return {"text": text}

    return app
