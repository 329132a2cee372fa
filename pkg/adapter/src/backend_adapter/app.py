"""FastAPI service implementing the shared backend wire protocol.

Endpoints: POST /segment, /score, /validate, /inpaint. Every response body
(success or error) carries the protocol ``version``; successful bodies also
carry the serving ``model`` as ``name@version``. Malformed payloads get a
structured 4xx, oversize images a 413, model failures a structured 500.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .codec import (
    PROTOCOL_VERSION,
    CodecError,
    array_to_b64png,
    b64png_to_array,
    bits_to_rle,
    rle_to_bits,
)
from .models import AdapterConfig, ModelSuite, build_suite


class SegmentRequest(BaseModel):
    image: str


class ScoreRequest(BaseModel):
    image: str
    mask: dict
    text: str


class ValidateRequest(BaseModel):
    image: str
    category: str


class InpaintRequest(BaseModel):
    image: str
    mask: dict
    prompt: str
    pass_index: int = Field(default=0, ge=0)


class OversizeError(ValueError):
    pass


def _error_body(code: str, message: str) -> dict:
    return {"version": PROTOCOL_VERSION, "error": {"code": code, "message": message}}


def create_app(config: AdapterConfig, suite: ModelSuite | None = None) -> FastAPI:
    suite = suite or build_suite(config)
    app = FastAPI(title="model-backend-adapter")

    def decode_image(data: str) -> np.ndarray:
        image = b64png_to_array(data)
        h, w = image.shape[:2]
        if max(h, w) > config.max_image_side:
            raise OversizeError(
                f"image {w}x{h} exceeds the configured limit of "
                f"{config.max_image_side}px per side"
            )
        return image

    def decode_mask(rle: dict, image: np.ndarray) -> np.ndarray:
        bits = rle_to_bits(rle)
        if bits.shape != image.shape[:2]:
            raise CodecError(
                f"mask {bits.shape} does not match image {image.shape[:2]}"
            )
        return bits

    @app.exception_handler(CodecError)
    async def codec_error(request: Request, exc: CodecError):
        return JSONResponse(status_code=400, content=_error_body("malformed-payload", str(exc)))

    @app.exception_handler(OversizeError)
    async def oversize_error(request: Request, exc: OversizeError):
        return JSONResponse(status_code=413, content=_error_body("image-too-large", str(exc)))

    @app.exception_handler(Exception)
    async def model_error(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content=_error_body("model-failure", f"{type(exc).__name__}: {exc}"),
        )

    def envelope(**fields) -> dict:
        return {"version": PROTOCOL_VERSION, "model": suite.model_id, **fields}

    @app.post("/segment")
    async def segment(req: SegmentRequest):
        image = decode_image(req.image)
        masks = suite.segment(image)
        return envelope(masks=[bits_to_rle(bits) for bits in masks])

    @app.post("/score")
    async def score(req: ScoreRequest):
        image = decode_image(req.image)
        bits = decode_mask(req.mask, image)
        return envelope(score=float(suite.score(image, bits, req.text)))

    @app.post("/validate")
    async def validate(req: ValidateRequest):
        image = decode_image(req.image)
        answer, raw = suite.validate(image, req.category)
        return envelope(answer=answer, raw=raw)

    @app.post("/inpaint")
    async def inpaint(req: InpaintRequest):
        image = decode_image(req.image)
        bits = decode_mask(req.mask, image)
        result = suite.inpaint(image, bits, req.prompt, req.pass_index)
        return envelope(image=array_to_b64png(result))

    @app.get("/healthz")
    async def healthz():
        return envelope(status="ok")

    return app
