"""Query pipeline: preprocess and embed spoken queries, search, expand context,
optionally rerank with an external cross-encoder scorer.

Queries go through exactly the same mono/16 kHz/embed/normalize path as the
indexed segments, so identical audio lands on the identical vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .audio import PIPELINE_RATE, AudioBuffer, load_audio, resample, to_mono
from .embedding import Embedding, EmbeddingBackend, embed
from .errors import MissingTranscript
from .index import Index, SearchHit
from .segmentation import Segment


class SegmentLookup(Protocol):
    def get_segment(self, segment_id: str) -> Segment: ...


class RerankClient(Protocol):
    def score(self, query: str, passages: list[str]) -> list[float]: ...


class TranscribeClient(Protocol):
    def transcribe(self, buf: AudioBuffer) -> str: ...


@dataclass
class RetrievalResult:
    query_id: str
    hits: list[SearchHit]
    context_segments: list[str] = field(default_factory=list)
    reranked: bool = False


def process_query(
    audio: AudioBuffer | str | Path,
    backend: EmbeddingBackend,
    *,
    pipeline_rate: int = PIPELINE_RATE,
) -> Embedding:
    """Decode (if given a path), downmix, resample, embed, normalize."""
    buf = audio if isinstance(audio, AudioBuffer) else load_audio(audio)
    buf = resample(to_mono(buf), pipeline_rate)
    return embed(buf, backend)


def expand_context(hits: list[SearchHit], store: SegmentLookup) -> list[str]:
    """[prev, hit, next] per hit in rank order, skipping absent neighbors,
    deduplicated by first occurrence."""
    seen: dict[str, None] = {}
    for hit in hits:
        seg = store.get_segment(hit.segment_id)
        for sid in (seg.prev_id, seg.segment_id, seg.next_id):
            if sid is not None and sid not in seen:
                seen[sid] = None
    return list(seen)


def retrieve(
    index: Index,
    store: SegmentLookup,
    q: Embedding,
    k: int = 10,
    *,
    query_id: str = "",
) -> RetrievalResult:
    """Top-k cosine search plus neighbor context expansion."""
    hits = index.search(q, k)
    return RetrievalResult(query_id=query_id, hits=hits,
                           context_segments=expand_context(hits, store))


def rerank(
    query_text: str,
    result: RetrievalResult,
    scorer: RerankClient,
    store: SegmentLookup,
) -> RetrievalResult:
    """Reorder the core hits by scorer score over (query, transcript) pairs.

    Ties keep the prior rank order. Hit scores carry the scorer's scores
    afterwards; context is recomputed from the new order.
    """
    transcripts = []
    for hit in result.hits:
        seg = store.get_segment(hit.segment_id)
        if seg.transcript is None:
            raise MissingTranscript(f"segment {seg.segment_id} has no transcript to rerank on")
        transcripts.append(seg.transcript)
    scores = scorer.score(query_text, transcripts)
    order = sorted(range(len(result.hits)), key=lambda i: (-scores[i], i))
    new_hits = [
        SearchHit(segment_id=result.hits[i].segment_id, score=float(scores[i]), rank=pos + 1)
        for pos, i in enumerate(order)
    ]
    return RetrievalResult(query_id=result.query_id, hits=new_hits,
                           context_segments=expand_context(new_hits, store), reranked=True)
