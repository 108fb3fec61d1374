"""Umbrella command line: ingest, query, answer, eval-retrieval, eval-answers, serve.

Every verb takes --config FILE (INI-style sections) and --store DIR; results
print as JSON on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .engine import Engine
from .errors import VoxRagError
from .evaluation import AnswerEvalItem, EvalQuery
from .index import Index
from .service import result_dict, segment_view
from .store import SegmentStore


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="engine config file")
    common.add_argument("--store", metavar="DIR", default="voxrag-store",
                        help="segment store directory (default: voxrag-store)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="voxrag",
                                     description="speech-to-speech retrieval engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="index an episode")
    p.add_argument("audio", help="episode WAV file")
    p.add_argument("--rttm", help="diarization RTTM file")
    p.add_argument("--transcripts", help="JSONL {segment_id, text}")
    p.add_argument("--spans", help="speech span list (overrides built-in VAD)")
    p.add_argument("--episode-id", dest="episode_id")

    p = sub.add_parser("query", parents=[common], help="retrieve segments for a spoken query")
    p.add_argument("--audio", required=True, help="query WAV file")
    p.add_argument("--index", help="explicit index file (default: the store's)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--text", help="query text for reranking")

    p = sub.add_parser("answer", parents=[common], help="retrieve and generate an answer")
    p.add_argument("--query-audio", dest="query_audio", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--text", help="question text (otherwise transcribed)")
    p.add_argument("--query-id", dest="query_id", default="")

    p = sub.add_parser("eval-retrieval", parents=[common], help="judge retrieval quality")
    p.add_argument("--mode", choices=["vr", "sr"], required=True)
    p.add_argument("--queries", required=True, help="JSONL {query_id, audio, text?}")
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--cache", help="judgment cache JSONL")
    p.add_argument("--report", help="report output directory")

    p = sub.add_parser("eval-answers", parents=[common], help="judge answer quality")
    p.add_argument("--items", required=True,
                   help="JSONL {query_id, query_text, answer_text, documents}")
    p.add_argument("--report", help="report output directory")

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8357)

    return parser


def _engine(args, create_store=False) -> Engine:
    cfg = load_config(args.config)
    store = SegmentStore(args.store, create=create_store)
    return Engine(store, cfg)


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, ensure_ascii=False, indent=2)
    sys.stdout.write("\n")


def _read_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()]


def cmd_ingest(args) -> None:
    engine = _engine(args, create_store=True)
    summary = engine.ingest(args.audio, rttm_path=args.rttm,
                            transcripts_path=args.transcripts, spans_path=args.spans,
                            episode_id=args.episode_id)
    _emit({"episode_id": summary.episode_id, "segment_count": summary.segment_count,
           "duration_s": summary.duration_s, "speech_s": summary.speech_s})


def cmd_query(args) -> None:
    engine = _engine(args)
    if args.index:
        engine.use_index(Index.load(args.index))
    result = engine.query(args.audio, text=args.text, k=args.k, use_rerank=args.rerank)
    _emit(result_dict(result))


def cmd_answer(args) -> None:
    engine = _engine(args)
    bundle = engine.answer(args.query_audio, text=args.text, k=args.k,
                           use_rerank=args.rerank, query_id=args.query_id)
    hits = {h.segment_id: h for h in bundle.result.hits}
    _emit({
        "query_id": args.query_id,
        "answer": bundle.answer.text,
        "model_id": bundle.answer.model_id,
        "prompt_hash": bundle.answer.prompt_hash,
        "segments": [segment_view(engine.store.get_segment(sid), hits.get(sid))
                     for sid in bundle.result.context_segments],
    })


def cmd_eval_retrieval(args) -> None:
    engine = _engine(args)
    queries = [EvalQuery(query_id=row["query_id"], audio_path=row.get("audio"),
                         text=row.get("text"))
               for row in _read_jsonl(args.queries)]
    row = engine.eval_retrieval(queries, args.mode, use_rerank=args.rerank,
                                cache_path=args.cache, report_dir=args.report)
    _emit({"setup": row.setup, "recall_at_10": row.recall_at_10,
           "ndcg_at_10": row.ndcg_at_10, "n_queries": row.n_queries,
           "undefined_count": row.undefined_count})


def cmd_eval_answers(args) -> None:
    engine = _engine(args)
    items = [AnswerEvalItem(query_id=row["query_id"], query_text=row["query_text"],
                            answer_text=row["answer_text"],
                            documents=list(row.get("documents", [])))
             for row in _read_jsonl(args.items)]
    report = engine.eval_answers(items, report_dir=args.report)
    _emit({
        "n": report.n,
        "rows": [{"metric": r.metric, "mean": r.mean, "std": r.std,
                  "delta": r.delta_vs_relevance, "d": r.cohen_d, "p": r.p_value,
                  "significantly_lower": r.significantly_lower, "degenerate": r.degenerate}
                 for r in report.rows],
        "correlations": {f"{a}/{b}": v for (a, b), v in report.correlations.items()},
    })


def cmd_serve(args) -> None:
    from .service import serve

    engine = _engine(args, create_store=True)
    serve(engine, host=args.host, port=args.port)


_COMMANDS = {
    "ingest": cmd_ingest,
    "query": cmd_query,
    "answer": cmd_answer,
    "eval-retrieval": cmd_eval_retrieval,
    "eval-answers": cmd_eval_answers,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (VoxRagError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
