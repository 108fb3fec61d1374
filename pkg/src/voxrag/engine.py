"""Engine facade: builds backends from config and exposes the user-facing verbs
(ingest, query, answer, eval-retrieval, eval-answers) over one store."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .audio import AudioBuffer, load_audio, resample, to_mono
from .config import EngineConfig
from .embedding import EmbedderConfig, Embedding, EmbeddingBackend, l2_normalize, make_backend
from .errors import BackendUnavailable
from .evaluation import (AnswerEvalItem, EvalQuery, JudgmentCache, MetricsRow, StatsReport,
                         run_answer_eval, run_retrieval_eval, standard_meta,
                         write_answer_report, write_retrieval_report)
from .generation import Answer, ChatClient, HttpChatClient, Prompt, build_prompt, generate
from .index import Index
from .retrieval import (RerankClient, RetrievalResult, TranscribeClient, process_query,
                        rerank, retrieve)
from .store import IngestSummary, SegmentStore, ingest_episode
from .stubs import EchoChatClient, LengthReranker, StubJudgeClient, StubPolicy, StubTranscriber


def make_embedder(cfg: EngineConfig) -> EmbeddingBackend:
    return make_backend(EmbedderConfig(
        backend=cfg.embed_backend, endpoint=cfg.sidecar_endpoint, path=cfg.vector_file,
        dim=cfg.dim, seed=cfg.seed, batch_size=cfg.embed_batch,
        max_inflight=cfg.embed_inflight))


def make_reranker(cfg: EngineConfig) -> Optional[RerankClient]:
    if cfg.rerank_backend == "none":
        return None
    if cfg.rerank_backend == "stub":
        return LengthReranker()
    if cfg.rerank_backend == "sidecar":
        if not cfg.sidecar_endpoint:
            raise ValueError("sidecar reranker requires a sidecar endpoint")
        from .sidecar import SidecarReranker

        return SidecarReranker(cfg.sidecar_endpoint)
    raise ValueError(f"unknown rerank backend {cfg.rerank_backend!r}")


def make_transcriber(cfg: EngineConfig) -> Optional[TranscribeClient]:
    if cfg.transcriber_backend == "none":
        return None
    if cfg.transcriber_backend == "stub":
        return StubTranscriber(seed=cfg.seed)
    if cfg.transcriber_backend == "sidecar":
        if not cfg.sidecar_endpoint:
            raise ValueError("sidecar transcriber requires a sidecar endpoint")
        from .sidecar import SidecarTranscriber

        return SidecarTranscriber(cfg.sidecar_endpoint)
    raise ValueError(f"unknown transcriber backend {cfg.transcriber_backend!r}")


def make_chat_client(cfg: EngineConfig) -> ChatClient:
    if cfg.chat_backend == "stub":
        return EchoChatClient()
    if cfg.chat_backend == "http":
        if not cfg.chat_endpoint or not cfg.chat_model:
            raise BackendUnavailable("chat backend needs CHAT_ENDPOINT and CHAT_MODEL")
        return HttpChatClient(cfg.chat_endpoint, cfg.chat_model, api_key=cfg.chat_api_key)
    raise ValueError(f"unknown chat backend {cfg.chat_backend!r}")


def make_judge_client(cfg: EngineConfig) -> ChatClient:
    if cfg.judge_backend == "stub":
        return StubJudgeClient(StubPolicy(seed=cfg.seed))
    if cfg.judge_backend == "http":
        endpoint = cfg.judge_endpoint or cfg.chat_endpoint
        model = cfg.judge_model or cfg.chat_model
        if not endpoint or not model:
            raise BackendUnavailable("judge backend needs an endpoint and model")
        return HttpChatClient(endpoint, model, api_key=cfg.chat_api_key)
    raise ValueError(f"unknown judge backend {cfg.judge_backend!r}")


@dataclass
class AnswerBundle:
    answer: Answer
    prompt: Prompt
    result: RetrievalResult


class Engine:
    """One store, one config, lazily-built backends; safe for concurrent queries."""

    def __init__(self, store: SegmentStore, cfg: EngineConfig,
                 *,
                 embedder: Optional[EmbeddingBackend] = None,
                 reranker: Optional[RerankClient] = None,
                 transcriber: Optional[TranscribeClient] = None,
                 chat: Optional[ChatClient] = None,
                 judge: Optional[ChatClient] = None):
        self.store = store
        self.cfg = cfg
        self.embedder = embedder or make_embedder(cfg)
        self.reranker = reranker if reranker is not None else make_reranker(cfg)
        self.transcriber = transcriber if transcriber is not None else make_transcriber(cfg)
        self.chat = chat or make_chat_client(cfg)
        self.judge = judge or make_judge_client(cfg)
        self._index: Optional[Index] = None
        self._index_lock = threading.Lock()

    @property
    def index(self) -> Index:
        with self._index_lock:
            if self._index is None:
                self._index = self.store.load_index(dim=self.cfg.dim)
            return self._index

    def reload_index(self) -> None:
        with self._index_lock:
            self._index = self.store.load_index(dim=self.cfg.dim)

    def use_index(self, index: Index) -> None:
        """Serve searches from an explicitly loaded index file."""
        with self._index_lock:
            self._index = index

    # -- verbs -------------------------------------------------------------------

    def ingest(self, audio_path, *, rttm_path=None, transcripts_path=None, spans_path=None,
               episode_id=None) -> IngestSummary:
        check_info = getattr(self.embedder, "check_info", None)
        if check_info is not None:
            check_info()  # refuse on /info dim mismatch before any writes
        summary = ingest_episode(
            self.store, self.cfg, audio_path, rttm_path=rttm_path,
            transcripts_path=transcripts_path, spans_path=spans_path,
            episode_id=episode_id, embedder=self.embedder,
            transcriber=self.transcriber if self.cfg.transcribe_on_ingest else None)
        self.reload_index()
        return summary

    def embed_query(self, audio: AudioBuffer | str | Path) -> Embedding:
        return process_query(audio, self.embedder, pipeline_rate=self.cfg.pipeline_rate)

    def query(
        self,
        audio: AudioBuffer | str | Path | None = None,
        *,
        embedding: Optional[Sequence[float]] = None,
        text: Optional[str] = None,
        k: Optional[int] = None,
        use_rerank: bool = False,
        query_id: str = "",
    ) -> RetrievalResult:
        k = k or self.cfg.k
        if embedding is not None:
            emb = l2_normalize(Embedding(values=np.asarray(embedding, dtype=np.float32),
                                         dim=len(embedding)))
        elif audio is not None:
            emb = self.embed_query(audio)
        else:
            raise ValueError("query needs audio or an embedding")
        result = retrieve(self.index, self.store, emb, k, query_id=query_id)
        if use_rerank:
            if self.reranker is None:
                raise BackendUnavailable("rerank requested but no reranker configured")
            result = rerank(self._query_text(audio, text), result, self.reranker, self.store)
        return result

    def _query_text(self, audio, text: Optional[str]) -> str:
        if text is not None:
            return text
        if self.transcriber is None or audio is None:
            raise BackendUnavailable("no query text available and no transcriber configured")
        buf = audio if isinstance(audio, AudioBuffer) else load_audio(audio)
        buf = resample(to_mono(buf), self.cfg.pipeline_rate)
        return self.transcriber.transcribe(buf)

    def answer(
        self,
        audio: AudioBuffer | str | Path | None = None,
        *,
        embedding: Optional[Sequence[float]] = None,
        text: Optional[str] = None,
        k: Optional[int] = None,
        use_rerank: bool = False,
        query_id: str = "",
    ) -> AnswerBundle:
        result = self.query(audio, embedding=embedding, text=text, k=k,
                            use_rerank=use_rerank, query_id=query_id)
        question = self._query_text(audio, text)
        segments = [self.store.get_segment(sid) for sid in result.context_segments]
        prompt = build_prompt(question, segments, instruction=self.cfg.instruction)
        return AnswerBundle(answer=generate(prompt, self.chat), prompt=prompt, result=result)

    def eval_retrieval(self, queries: Sequence[EvalQuery], mode: str, *,
                       use_rerank: bool = False, cache_path=None,
                       report_dir=None) -> MetricsRow:
        cache = JudgmentCache(cache_path)
        row = run_retrieval_eval(
            queries, self.index, self.store, self.judge, mode,
            embedder=self.embedder, with_rerank=use_rerank, reranker=self.reranker,
            transcriber=self.transcriber, k=self.cfg.k, cache=cache,
            pipeline_rate=self.cfg.pipeline_rate, max_workers=self.cfg.judge_inflight,
            retries=self.cfg.judge_retries)
        if report_dir is not None:
            write_retrieval_report([row], report_dir,
                                   meta=standard_meta(self.judge, mode=mode.lower(),
                                                      n_queries=row.n_queries))
        return row

    def eval_answers(self, items: Sequence[AnswerEvalItem], *,
                     report_dir=None) -> StatsReport:
        report = run_answer_eval(items, self.judge, alpha=self.cfg.alpha,
                                 max_workers=self.cfg.judge_inflight,
                                 retries=self.cfg.judge_retries)
        if report_dir is not None:
            write_answer_report(report, report_dir,
                                meta=standard_meta(self.judge, n_queries=report.n))
        return report
