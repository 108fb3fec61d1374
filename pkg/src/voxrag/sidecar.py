"""HTTP clients for the model sidecar: embedding, rerank scoring, transcription.

Wire protocol:
  GET  /info       -> {"dim", "embed_model", "asr_model", "reranker"}
  POST /embed      -> body {"payloads": [base64 WAV, ...]},
                      reply {"vectors": [[...], ...], "dim": D}
  POST /transcribe -> raw WAV body, reply {"text": ...}
  POST /rerank     -> {"query": ..., "passages": [...]}, reply {"scores": [...]}
"""

from __future__ import annotations

import base64
import threading

import httpx
import numpy as np

from .audio import AudioBuffer, encode_wav
from .errors import BackendUnavailable, DimensionMismatch


def _post(client: httpx.Client, url: str, **kwargs) -> httpx.Response:
    try:
        resp = client.post(url, **kwargs)
    except httpx.HTTPError as exc:
        raise BackendUnavailable(f"sidecar unreachable: {exc}") from exc
    if resp.status_code != 200:
        raise BackendUnavailable(f"sidecar returned {resp.status_code}: {resp.text[:200]}")
    return resp


def fetch_info(endpoint: str, client: httpx.Client | None = None) -> dict:
    own = client is None
    client = client or httpx.Client(timeout=30.0)
    try:
        resp = client.get(endpoint.rstrip("/") + "/info")
    except httpx.HTTPError as exc:
        raise BackendUnavailable(f"sidecar unreachable: {exc}") from exc
    finally:
        if own:
            client.close()
    if resp.status_code != 200:
        raise BackendUnavailable(f"sidecar /info returned {resp.status_code}")
    return resp.json()


class SidecarEmbedder:
    """Batched /embed client with a bounded in-flight request count."""

    def __init__(self, endpoint: str, dim: int, batch_size: int = 16, max_inflight: int = 4,
                 client: httpx.Client | None = None, timeout: float = 120.0):
        self.endpoint = endpoint.rstrip("/")
        self.dim = dim
        self.batch_size = max(1, batch_size)
        self._client = client or httpx.Client(timeout=timeout)
        self._inflight = threading.Semaphore(max(1, max_inflight))

    def check_info(self) -> dict:
        """Fetch /info and refuse to proceed on a dimension mismatch."""
        info = fetch_info(self.endpoint, self._client)
        if int(info.get("dim", -1)) != self.dim:
            raise DimensionMismatch(
                f"sidecar serves dim {info.get('dim')}, engine configured for {self.dim}")
        return info

    def embed_batch(self, items):
        vectors: list[np.ndarray] = []
        for start in range(0, len(items), self.batch_size):
            chunk = items[start:start + self.batch_size]
            payloads = [base64.b64encode(encode_wav(buf)).decode("ascii") for _key, buf in chunk]
            with self._inflight:
                resp = _post(self._client, self.endpoint + "/embed", json={"payloads": payloads})
            body = resp.json()
            got = body.get("vectors", [])
            if len(got) != len(chunk):
                raise BackendUnavailable(f"sidecar returned {len(got)} vectors for {len(chunk)} payloads")
            vectors.extend(np.asarray(v, dtype=np.float32) for v in got)
        return vectors


class SidecarReranker:
    def __init__(self, endpoint: str, client: httpx.Client | None = None, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def score(self, query: str, passages: list[str]) -> list[float]:
        resp = _post(self._client, self.endpoint + "/rerank",
                     json={"query": query, "passages": passages})
        scores = resp.json().get("scores", [])
        if len(scores) != len(passages):
            raise BackendUnavailable(f"reranker returned {len(scores)} scores for {len(passages)} passages")
        return [float(s) for s in scores]


class SidecarTranscriber:
    def __init__(self, endpoint: str, client: httpx.Client | None = None, timeout: float = 300.0):
        self.endpoint = endpoint.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def transcribe(self, buf: AudioBuffer) -> str:
        resp = _post(self._client, self.endpoint + "/transcribe",
                     content=encode_wav(buf), headers={"content-type": "audio/wav"})
        return str(resp.json().get("text", ""))
