"""Embedding gateway: pluggable backends behind a single L2-normalizing entry point.

Backends: an HTTP model sidecar, a precomputed-vector JSONL file, and a
deterministic hash stub. Normalization always happens here, whatever the
backend claims.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from .audio import AudioBuffer
from .errors import BackendUnavailable, DimensionMismatch, InvariantViolation, NonFiniteValue, ZeroVector

DEFAULT_DIM = 512

NORM_TOLERANCE = 1e-5


@dataclass
class Embedding:
    values: np.ndarray  # float32, shape (dim,)
    dim: int
    normalized: bool = False


@dataclass
class EmbedderConfig:
    backend: str = "stub"  # stub | file | sidecar
    endpoint: Optional[str] = None
    path: Optional[str] = None
    dim: int = DEFAULT_DIM
    seed: int = 0
    batch_size: int = 16
    max_inflight: int = 4

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")


class EmbeddingBackend(Protocol):
    """Maps (optional segment id, audio buffer) pairs to raw vectors."""

    dim: int

    def embed_batch(self, items: Sequence[tuple[Optional[str], AudioBuffer]]) -> list[np.ndarray]: ...


def l2_normalize(e: Embedding) -> Embedding:
    """Scale to unit L2 norm. Raises ZeroVector when the norm is zero."""
    values = np.asarray(e.values, dtype=np.float32)
    norm = float(np.linalg.norm(values.astype(np.float64)))
    if norm == 0.0:
        raise ZeroVector("cannot normalize an all-zero embedding")
    return Embedding(values=(values / np.float32(norm)).astype(np.float32), dim=e.dim, normalized=True)


def _validate_vector(vec: np.ndarray, dim: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float32).reshape(-1)
    if len(vec) != dim:
        raise DimensionMismatch(f"backend returned {len(vec)} values, expected {dim}")
    if not np.all(np.isfinite(vec)):
        raise NonFiniteValue("embedding contains NaN or infinity")
    return vec


class FileBackend:
    """Precomputed vectors from a JSON Lines file of {"id": ..., "vector": [...]}."""

    def __init__(self, path: str | Path, dim: int):
        self.dim = dim
        self._vectors: dict[str, np.ndarray] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            self._vectors[row["id"]] = np.asarray(row["vector"], dtype=np.float32)

    def embed_batch(self, items):
        out = []
        for key, _buf in items:
            if key is None or key not in self._vectors:
                raise BackendUnavailable(f"no stored vector for id {key!r}")
            out.append(self._vectors[key])
        return out


def make_backend(cfg: EmbedderConfig) -> EmbeddingBackend:
    if cfg.backend == "stub":
        from .stubs import StubEmbedder

        return StubEmbedder(dim=cfg.dim, seed=cfg.seed)
    if cfg.backend == "file":
        if not cfg.path:
            raise ValueError("file backend requires a vector file path")
        return FileBackend(cfg.path, dim=cfg.dim)
    if cfg.backend == "sidecar":
        if not cfg.endpoint:
            raise ValueError("sidecar backend requires an endpoint")
        from .sidecar import SidecarEmbedder

        return SidecarEmbedder(cfg.endpoint, dim=cfg.dim, batch_size=cfg.batch_size,
                               max_inflight=cfg.max_inflight)
    raise ValueError(f"unknown embedding backend {cfg.backend!r}")


def embed_many(
    items: Sequence[tuple[Optional[str], AudioBuffer]],
    backend: EmbeddingBackend,
) -> list[Embedding]:
    """Embed buffers through a backend, validating and normalizing every vector."""
    for _key, buf in items:
        if buf.channel_count != 1:
            raise InvariantViolation("embedding input must be mono")
    raw = backend.embed_batch(items)
    if len(raw) != len(items):
        raise BackendUnavailable(f"backend returned {len(raw)} vectors for {len(items)} inputs")
    out = []
    for vec in raw:
        emb = Embedding(values=_validate_vector(vec, backend.dim), dim=backend.dim)
        out.append(l2_normalize(emb))
    return out


def embed(buf: AudioBuffer, backend: EmbeddingBackend, *, key: Optional[str] = None) -> Embedding:
    return embed_many([(key, buf)], backend)[0]
