"""HTTP service over one engine: ingest, query, answer, segment access, eval.

Queries run under a reader-preferring lock; episode ingest takes the write
side so index swaps never race in-flight searches.
"""

from __future__ import annotations

import json
import socket
import tempfile
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Form, Query, Request, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from .audio import encode_wav
from .engine import Engine
from .errors import BackendUnavailable, PortInUse, UnknownSegmentId, VoxRagError
from .evaluation import AnswerEvalItem, EvalQuery
from .index import SearchHit
from .retrieval import RetrievalResult
from .segmentation import Segment


class ReadWriteLock:
    """Reader-preferring: readers share; the writer waits for a quiet moment."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writing = False

    def acquire_read(self):
        with self._cond:
            while self._writing:
                self._cond.wait()
            self._readers += 1

    def release_read(self):
        with self._cond:
            self._readers -= 1
            if self._readers == 0:
                self._cond.notify_all()

    def acquire_write(self):
        with self._cond:
            while self._writing or self._readers > 0:
                self._cond.wait()
            self._writing = True

    def release_write(self):
        with self._cond:
            self._writing = False
            self._cond.notify_all()


def hit_dict(hit: SearchHit) -> dict:
    return {"segment_id": hit.segment_id, "score": hit.score, "rank": hit.rank}


def result_dict(result: RetrievalResult) -> dict:
    return {
        "query_id": result.query_id,
        "hits": [hit_dict(h) for h in result.hits],
        "context_segments": list(result.context_segments),
        "reranked": result.reranked,
    }


def segment_view(seg: Segment, hit: Optional[SearchHit] = None) -> dict:
    view = seg.to_manifest_dict()
    view["rank"] = hit.rank if hit else None
    view["score"] = hit.score if hit else None
    return view


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="voxrag", version="0.1.0")
    lock = ReadWriteLock()

    @app.exception_handler(VoxRagError)
    async def vox_error(request: Request, exc: VoxRagError):
        status = 400
        if isinstance(exc, UnknownSegmentId):
            status = 404
        elif isinstance(exc, BackendUnavailable):
            status = 503
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def not_found(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=404,
                            content={"error": "NotFound", "detail": str(exc)})

    @app.get("/healthz")
    async def healthz():
        return PlainTextResponse("ok")

    @app.post("/episodes")
    def post_episode(
        audio: UploadFile = File(...),
        rttm: Optional[UploadFile] = File(None),
        transcripts: Optional[UploadFile] = File(None),
        spans: Optional[UploadFile] = File(None),
        episode_id: Optional[str] = Form(None),
    ):
        with tempfile.TemporaryDirectory(prefix="voxrag-upload-") as tmp:
            tmp_dir = Path(tmp)
            audio_path = tmp_dir / (audio.filename or "episode.wav")
            audio_path.write_bytes(audio.file.read())
            paths = {}
            for name, upload in (("rttm", rttm), ("transcripts", transcripts),
                                 ("spans", spans)):
                if upload is not None:
                    path = tmp_dir / f"{name}.txt"
                    path.write_bytes(upload.file.read())
                    paths[name] = path
            lock.acquire_write()
            try:
                summary = engine.ingest(
                    audio_path, rttm_path=paths.get("rttm"),
                    transcripts_path=paths.get("transcripts"),
                    spans_path=paths.get("spans"), episode_id=episode_id)
            finally:
                lock.release_write()
        return {"episode_id": summary.episode_id, "segment_count": summary.segment_count,
                "duration_s": summary.duration_s, "speech_s": summary.speech_s}

    async def _query_input(request: Request):
        """WAV body or JSON {"embedding": [...], "query_text": ...}."""
        body = await request.body()
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("application/json"):
            payload = json.loads(body)
            return None, payload.get("embedding"), payload.get("query_text")
        from .audio import decode_wav

        return decode_wav(body), None, None

    @app.post("/query")
    async def post_query(request: Request, k: Optional[int] = Query(None),
                         rerank: bool = Query(False), text: Optional[str] = Query(None)):
        buf, embedding, body_text = await _query_input(request)
        lock.acquire_read()
        try:
            result = engine.query(buf, embedding=embedding, text=text or body_text,
                                  k=k, use_rerank=rerank)
        finally:
            lock.release_read()
        return result_dict(result)

    @app.post("/answer")
    async def post_answer(request: Request, k: Optional[int] = Query(None),
                          rerank: bool = Query(False), text: Optional[str] = Query(None)):
        buf, embedding, body_text = await _query_input(request)
        lock.acquire_read()
        try:
            bundle = engine.answer(buf, embedding=embedding, text=text or body_text,
                                   k=k, use_rerank=rerank)
        finally:
            lock.release_read()
        hits_by_id = {h.segment_id: h for h in bundle.result.hits}
        segments = [segment_view(engine.store.get_segment(sid), hits_by_id.get(sid))
                    for sid in bundle.result.context_segments]
        return {
            "answer": bundle.answer.text,
            "model_id": bundle.answer.model_id,
            "prompt_hash": bundle.answer.prompt_hash,
            "segments": segments,
            "reranked": bundle.result.reranked,
        }

    @app.get("/segments/{segment_id}")
    def get_segment(segment_id: str):
        return segment_view(engine.store.get_segment(segment_id))

    @app.get("/segments/{segment_id}/audio")
    def get_segment_audio(segment_id: str):
        buf = engine.store.segment_audio(segment_id)
        return Response(content=encode_wav(buf), media_type="audio/wav")

    @app.post("/eval/retrieval")
    def post_eval_retrieval(body: dict):
        queries = [EvalQuery(query_id=q["query_id"], audio_path=q.get("audio"),
                             text=q.get("text")) for q in body.get("queries", [])]
        mode = body.get("mode", "sr")
        lock.acquire_read()
        try:
            row = engine.eval_retrieval(queries, mode, use_rerank=bool(body.get("rerank")),
                                        cache_path=body.get("cache"),
                                        report_dir=body.get("report_dir"))
        finally:
            lock.release_read()
        return {"setup": row.setup, "recall_at_10": row.recall_at_10,
                "ndcg_at_10": row.ndcg_at_10, "n_queries": row.n_queries,
                "undefined_count": row.undefined_count}

    @app.post("/eval/answers")
    def post_eval_answers(body: dict):
        items = [AnswerEvalItem(query_id=i["query_id"], query_text=i["query_text"],
                                answer_text=i["answer_text"],
                                documents=list(i.get("documents", [])))
                 for i in body.get("items", [])]
        report = engine.eval_answers(items, report_dir=body.get("report_dir"))
        return {
            "n": report.n,
            "alpha": report.alpha,
            "rows": [{
                "metric": r.metric, "mean": r.mean, "std": r.std,
                "delta": r.delta_vs_relevance, "d": r.cohen_d, "p": r.p_value,
                "significantly_lower": r.significantly_lower, "degenerate": r.degenerate,
            } for r in report.rows],
            "correlations": {f"{a}/{b}": v for (a, b), v in report.correlations.items()},
        }

    return app


def check_port_free(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise PortInUse(f"{host}:{port} is already bound: {exc}") from exc
    finally:
        probe.close()


def serve(engine: Engine, host: str = "127.0.0.1", port: int = 8357) -> None:
    """Run the service until interrupted; in-flight requests finish on shutdown."""
    import uvicorn

    check_port_free(host, port)
    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")
