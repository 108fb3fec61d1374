"""The sidecar HTTP surface: /info, /embed, /transcribe, /rerank."""

from __future__ import annotations

import base64
import binascii
import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .backends import SidecarConfig, build_backends
from .wav import BadWav, decode_wav_mono


def create_app(cfg: SidecarConfig = SidecarConfig()) -> FastAPI:
    app = FastAPI(title="voxrag-sidecar", version="0.1.0")
    embedder, transcriber, reranker = build_backends(cfg)
    gpu_lock = threading.Lock()  # inference serializes; requests just have to complete

    def bad_request(detail: str) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": detail})

    @app.get("/info")
    def info():
        return {
            "dim": embedder.dim,
            "embed_model": embedder.model_id,
            "asr_model": transcriber.model_id,
            "reranker": reranker.model_id,
        }

    @app.post("/embed")
    async def embed(request: Request):
        body = await request.json()
        payloads = body.get("payloads", [])
        waves = []
        rate = 16000
        for i, encoded in enumerate(payloads):
            try:
                wave, rate = decode_wav_mono(base64.b64decode(encoded, validate=True))
            except (BadWav, binascii.Error, ValueError) as exc:
                return bad_request(f"payload {i}: {exc}")
            waves.append(wave)
        if not waves:
            return {"vectors": [], "dim": embedder.dim}
        with gpu_lock:
            vectors = embedder.embed(waves, rate)
        rows = []
        for i, vec in enumerate(vectors):
            arr = np.asarray(vec, dtype=np.float32)
            if not np.all(np.isfinite(arr)):
                return JSONResponse(status_code=500,
                                    content={"error": f"non-finite embedding for payload {i}"})
            rows.append([float(x) for x in arr])
        return {"vectors": rows, "dim": embedder.dim}

    @app.post("/transcribe")
    async def transcribe(request: Request):
        try:
            wave, rate = decode_wav_mono(await request.body())
        except BadWav as exc:
            return bad_request(str(exc))
        with gpu_lock:
            text = transcriber.transcribe(wave, rate)
        return {"text": text}

    @app.post("/rerank")
    async def rerank(request: Request):
        body = await request.json()
        query = body.get("query", "")
        passages = body.get("passages", [])
        if not passages:
            return bad_request("passages must be non-empty")
        with gpu_lock:
            scores = reranker.score(query, passages)
        return {"scores": [float(s) for s in scores]}

    return app
