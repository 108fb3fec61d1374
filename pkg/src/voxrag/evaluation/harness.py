"""Evaluation drivers: retrieval quality rows and answer-quality statistics.

Relevance judgments are cached by (query_id, segment_id, mode) in a JSON
Lines file so reruns are free, and reports are written with deterministic
formatting: a frozen cache yields byte-identical reports.
"""

from __future__ import annotations

import csv
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..audio import PIPELINE_RATE, load_audio, resample, to_mono
from ..embedding import EmbeddingBackend
from ..errors import BackendUnavailable, DegenerateVariance, MissingTranscript
from ..generation import ChatClient
from ..index import Index
from ..retrieval import (RerankClient, RetrievalResult, SegmentLookup, TranscribeClient,
                         process_query, rerank, retrieve)
from .judging import (ANSWER_DIMENSIONS, AnswerScores, judge_answer, judge_prompt_hash,
                      judge_relevance)
from .metrics import ndcg_at_k, recall_at_k
from .stats import mean, paired_stats, pearson_r, sample_std


@dataclass
class EvalQuery:
    query_id: str
    audio_path: Optional[str] = None
    text: Optional[str] = None


@dataclass
class MetricsRow:
    setup: str  # "cosine" or "cosine+CE", with the judging mode
    recall_at_10: float
    ndcg_at_10: float
    n_queries: int
    undefined_count: int


@dataclass
class AnswerEvalItem:
    query_id: str
    query_text: str
    answer_text: str
    documents: list[str]


@dataclass
class StatsRow:
    metric: str
    mean: float
    std: float
    delta_vs_relevance: Optional[float] = None
    cohen_d: Optional[float] = None
    p_value: Optional[float] = None
    significantly_lower: Optional[bool] = None
    degenerate: bool = False


@dataclass
class StatsReport:
    rows: list[StatsRow]
    correlations: dict[tuple[str, str], Optional[float]]
    n: int
    alpha: float


class JudgmentCache:
    """JSON Lines cache of relevance judgments, keyed (query_id, segment_id, mode)."""

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path else None
        self._records: dict[tuple[str, str, str], dict] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    row = json.loads(line)
                    self._records[(row["query_id"], row["segment_id"], row["mode"])] = row

    def get(self, query_id: str, segment_id: str, mode: str) -> Optional[dict]:
        return self._records.get((query_id, segment_id, mode))

    def put(self, record: dict) -> None:
        key = (record["query_id"], record["segment_id"], record["mode"])
        with self._lock:
            self._records[key] = record
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def call_with_retries(fn, *, attempts: int = 3, base_delay: float = 0.1):
    """Retry on BackendUnavailable with exponential backoff."""
    for attempt in range(attempts):
        try:
            return fn()
        except BackendUnavailable:
            if attempt == attempts - 1:
                raise
            time.sleep(base_delay * (2 ** attempt))


def _query_text(query: EvalQuery, transcriber: Optional[TranscribeClient],
                pipeline_rate: int) -> str:
    if query.text is not None:
        return query.text
    if transcriber is None or query.audio_path is None:
        raise MissingTranscript(f"query {query.query_id} has no text and no transcriber is configured")
    buf = resample(to_mono(load_audio(query.audio_path)), pipeline_rate)
    return transcriber.transcribe(buf)


def run_retrieval_eval(
    queries: Sequence[EvalQuery],
    index: Index,
    store: SegmentLookup,
    judge: ChatClient,
    mode: str,
    *,
    embedder: EmbeddingBackend,
    with_rerank: bool = False,
    reranker: Optional[RerankClient] = None,
    transcriber: Optional[TranscribeClient] = None,
    k: int = 10,
    cache: Optional[JudgmentCache] = None,
    pipeline_rate: int = PIPELINE_RATE,
    max_workers: int = 4,
    retries: int = 3,
) -> MetricsRow:
    """Retrieve for every query, judge the core hits, aggregate Recall@k and nDCG@k.

    The relevant set per query is the judged pool of that query's own
    candidates; queries where the judge marks nothing relevant contribute 0
    to both means and are counted in undefined_count.
    """
    mode = mode.lower()
    cache = cache or JudgmentCache()
    results: list[tuple[EvalQuery, str, RetrievalResult]] = []
    for query in queries:
        if query.audio_path is None:
            raise ValueError(f"query {query.query_id} has no audio")
        emb = process_query(query.audio_path, embedder, pipeline_rate=pipeline_rate)
        result = retrieve(index, store, emb, k, query_id=query.query_id)
        text = _query_text(query, transcriber, pipeline_rate)
        if with_rerank:
            if reranker is None:
                raise ValueError("with_rerank requires a reranker")
            result = rerank(text, result, reranker, store)
        results.append((query, text, result))

    jobs = []
    for query, text, result in results:
        for hit in result.hits:
            if cache.get(query.query_id, hit.segment_id, mode) is None:
                seg = store.get_segment(hit.segment_id)
                if seg.transcript is None:
                    raise MissingTranscript(f"segment {seg.segment_id} has no transcript to judge")
                jobs.append((query.query_id, hit.segment_id, text, seg.transcript))

    def run_job(job):
        query_id, segment_id, text, transcript = job
        return call_with_retries(
            lambda: judge_relevance(text, transcript, mode, judge,
                                    query_id=query_id, segment_id=segment_id),
            attempts=retries)

    if jobs:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            judgments = list(pool.map(run_job, jobs))
        for judgment in judgments:  # input order, so the cache file is deterministic
            cache.put({
                "query_id": judgment.query_id,
                "segment_id": judgment.segment_id,
                "mode": judgment.mode,
                "label": judgment.label,
                "raw_reply": judgment.raw_reply,
                "judge_model": judge.model_id,
                "prompt_hash": judge_prompt_hash(mode),
            })

    recalls, ndcgs = [], []
    undefined = 0
    for query, _text, result in results:
        ranked = [hit.segment_id for hit in result.hits]
        labels = [cache.get(query.query_id, sid, mode)["label"] for sid in ranked]
        relevant = {sid for sid, label in zip(ranked, labels) if label == 1}
        if not relevant:
            undefined += 1
            recalls.append(0.0)
            ndcgs.append(0.0)
        else:
            recalls.append(recall_at_k(ranked, relevant, k))
            ndcgs.append(ndcg_at_k(labels, len(relevant), k))

    setup = f"{'cosine+CE' if with_rerank else 'cosine'} ({mode.upper()})"
    return MetricsRow(setup=setup, recall_at_10=mean(recalls), ndcg_at_10=mean(ndcgs),
                      n_queries=len(queries), undefined_count=undefined)


def run_answer_eval(
    items: Sequence[AnswerEvalItem],
    judge: ChatClient,
    *,
    alpha: float = 0.05,
    max_workers: int = 4,
    retries: int = 3,
) -> StatsReport:
    """Judge every answer on the four 0-2 axes and build the stats report."""

    def run_item(item: AnswerEvalItem) -> AnswerScores:
        scores, _raw = call_with_retries(
            lambda: judge_answer(item.query_text, item.documents, item.answer_text,
                                 judge, query_id=item.query_id),
            attempts=retries)
        return scores

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        scores = list(pool.map(run_item, items))
    return build_stats_report(scores, alpha=alpha)


def build_stats_report(scores: Sequence[AnswerScores], *, alpha: float = 0.05) -> StatsReport:
    """Means, stds, deltas vs relevance, paired d_z and p, and the Pearson matrix.

    Dimensions whose differences against relevance have zero variance get a
    degenerate flag instead of t-row values.
    """
    if len(scores) < 2:
        raise ValueError("answer eval needs at least two queries")
    arrays = {dim: [float(s.as_dict()[dim]) for s in scores] for dim in ANSWER_DIMENSIONS}
    relevance = arrays["relevance"]
    rows = []
    for dim in ANSWER_DIMENSIONS:
        arr = arrays[dim]
        row = StatsRow(metric=dim, mean=mean(arr), std=sample_std(arr))
        if dim != "relevance":
            row.delta_vs_relevance = mean(arr) - mean(relevance)
            try:
                ps = paired_stats(relevance, arr)
                row.cohen_d = ps.d_z
                row.p_value = ps.p_value
                row.significantly_lower = bool(ps.p_value < alpha and row.delta_vs_relevance < 0)
            except DegenerateVariance:
                row.degenerate = True
        rows.append(row)

    correlations: dict[tuple[str, str], Optional[float]] = {}
    for a in ANSWER_DIMENSIONS:
        for b in ANSWER_DIMENSIONS:
            if a == b:
                correlations[(a, b)] = 1.0
            else:
                try:
                    correlations[(a, b)] = pearson_r(arrays[a], arrays[b])
                except DegenerateVariance:
                    correlations[(a, b)] = None
    return StatsReport(rows=rows, correlations=correlations, n=len(scores), alpha=alpha)


# -- report files ---------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def write_retrieval_report(rows: Sequence[MetricsRow], outdir: str | Path,
                           meta: Optional[dict] = None) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "table1.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["setup", "recall_at_10", "ndcg_at_10", "n_queries", "undefined_count"])
        for row in rows:
            writer.writerow([row.setup, _fmt(row.recall_at_10), _fmt(row.ndcg_at_10),
                             row.n_queries, row.undefined_count])
    if meta is not None:
        _write_meta(outdir, meta)
    return path


def write_answer_report(report: StatsReport, outdir: str | Path,
                        meta: Optional[dict] = None) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "table2.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "mean", "std", "delta", "d", "p", "significant"])
        for row in report.rows:
            flags = "degenerate" if row.degenerate else _fmt(row.significantly_lower)
            writer.writerow([row.metric, _fmt(row.mean), _fmt(row.std),
                             _fmt(row.delta_vs_relevance), _fmt(row.cohen_d),
                             _fmt(row.p_value), flags])
    corr_path = outdir / "correlations.csv"
    with corr_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", *ANSWER_DIMENSIONS])
        for a in ANSWER_DIMENSIONS:
            writer.writerow([a, *[_fmt(report.correlations[(a, b)]) for b in ANSWER_DIMENSIONS]])
    if meta is not None:
        _write_meta(outdir, meta)
    return path


def _write_meta(outdir: Path, meta: dict) -> None:
    (outdir / "meta.json").write_text(
        json.dumps(meta, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def standard_meta(judge: ChatClient, **extra) -> dict:
    meta = {
        "judge_model": judge.model_id,
        "prompt_hashes": {name: judge_prompt_hash(name) for name in ("vr", "sr", "answer")},
    }
    meta.update(extra)
    return meta
