"""Model backends behind the sidecar endpoints.

Two families: "models" loads the real networks (CLAP for embedding, a
Whisper-class ASR pipeline, a cross-encoder reranker) lazily on first
construction; "hash" is a deterministic stand-in with the same contracts, for
environments without model weights and for conformance testing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

DEFAULT_EMBED_MODEL = "laion/clap-htsat-unfused"
DEFAULT_ASR_MODEL = "openai/whisper-base"
DEFAULT_RERANKER_MODEL = "cross-encoder/ms-marco-MiniLM-L6-v2"


class Embedder(Protocol):
    dim: int
    model_id: str

    def embed(self, waves: Sequence[np.ndarray], rate: int) -> list[np.ndarray]: ...


class Transcriber(Protocol):
    model_id: str

    def transcribe(self, wave: np.ndarray, rate: int) -> str: ...


class Reranker(Protocol):
    model_id: str

    def score(self, query: str, passages: Sequence[str]) -> list[float]: ...


# -- deterministic hash backends ------------------------------------------------

class HashEmbedder:
    """Pure function of the sample bytes; identical payloads map to identical vectors."""

    def __init__(self, dim: int = 512, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self.model_id = f"hash-embedder-{dim}"

    def embed(self, waves, rate):
        out = []
        for wave in waves:
            state = hashlib.blake2b(np.asarray(wave, dtype=np.float32).tobytes(),
                                    digest_size=8,
                                    key=self.seed.to_bytes(8, "little")).digest()
            blocks = []
            for i in range((self.dim * 8 + 63) // 64):
                blocks.append(hashlib.blake2b(state + i.to_bytes(4, "little"),
                                              digest_size=64).digest())
            words = np.frombuffer(b"".join(blocks), dtype="<u8")[:self.dim]
            out.append((words.astype(np.float64) / 2.0**63 - 1.0).astype(np.float32))
        return out


class HashTranscriber:
    model_id = "hash-transcriber"

    def transcribe(self, wave, rate):
        if len(wave) == 0 or not np.any(wave):
            return ""
        token = hashlib.blake2b(np.asarray(wave, dtype=np.float32).tobytes(),
                                digest_size=6).hexdigest()
        return f"synthetic transcript {token}"


class HashReranker:
    model_id = "hash-reranker"

    def score(self, query, passages):
        scores = []
        for passage in passages:
            digest = hashlib.blake2b(f"{query}\x1f{passage}".encode("utf-8"),
                                     digest_size=8).digest()
            scores.append(int.from_bytes(digest, "little") / 2.0**64)
        return scores


# -- real model backends ----------------------------------------------------------

class ClapEmbedder:
    """CLAP audio tower; the projection dimension becomes the served dim."""

    def __init__(self, model_id: str = DEFAULT_EMBED_MODEL, device: str = "cpu"):
        import torch
        from transformers import ClapModel, ClapProcessor

        self.model_id = model_id
        self._torch = torch
        self._model = ClapModel.from_pretrained(model_id).to(device).eval()
        self._processor = ClapProcessor.from_pretrained(model_id)
        self._device = device
        self.dim = int(self._model.config.projection_dim)

    def embed(self, waves, rate):
        inputs = self._processor(audios=[np.asarray(w, dtype=np.float32) for w in waves],
                                 sampling_rate=rate, return_tensors="pt", padding=True)
        inputs = {k: v.to(self._device) for k, v in inputs.items()}
        with self._torch.no_grad():
            features = self._model.get_audio_features(**inputs)
        return [row.astype(np.float32) for row in features.cpu().numpy()]


class WhisperTranscriber:
    def __init__(self, model_id: str = DEFAULT_ASR_MODEL, device: str = "cpu"):
        from transformers import pipeline

        self.model_id = model_id
        self._pipe = pipeline("automatic-speech-recognition", model=model_id, device=device)

    def transcribe(self, wave, rate):
        result = self._pipe({"raw": np.asarray(wave, dtype=np.float32), "sampling_rate": rate})
        return str(result.get("text", "")).strip()


class CrossEncoderReranker:
    def __init__(self, model_id: str = DEFAULT_RERANKER_MODEL, device: str = "cpu"):
        from sentence_transformers import CrossEncoder

        self.model_id = model_id
        self._model = CrossEncoder(model_id, device=device)

    def score(self, query, passages):
        return [float(s) for s in self._model.predict([(query, p) for p in passages])]


# -- configuration ------------------------------------------------------------------

@dataclass
class SidecarConfig:
    backend: str = "hash"  # hash | models
    embed_model: str = DEFAULT_EMBED_MODEL
    asr_model: str = DEFAULT_ASR_MODEL
    reranker_model: str = DEFAULT_RERANKER_MODEL
    dim: int = 512  # hash backend only; the models backend reports its own
    device: str = "cpu"
    port: int = 8600
    seed: int = 0


def build_backends(cfg: SidecarConfig) -> tuple[Embedder, Transcriber, Reranker]:
    if cfg.backend == "hash":
        return (HashEmbedder(dim=cfg.dim, seed=cfg.seed), HashTranscriber(), HashReranker())
    if cfg.backend == "models":
        return (ClapEmbedder(cfg.embed_model, cfg.device),
                WhisperTranscriber(cfg.asr_model, cfg.device),
                CrossEncoderReranker(cfg.reranker_model, cfg.device))
    raise ValueError(f"unknown sidecar backend {cfg.backend!r}")
