import math

import pytest

from voxrag.evaluation import (AnswerEvalItem, EvalQuery, JudgmentCache, build_stats_report,
                               run_answer_eval, run_retrieval_eval, standard_meta,
                               write_answer_report, write_retrieval_report)
from voxrag.evaluation.harness import call_with_retries
from voxrag.evaluation.judging import AnswerScores
from voxrag.errors import BackendUnavailable
from voxrag.stubs import StubJudgeClient, StubPolicy

from conftest import build_mini_corpus


def make_queries(paths, with_text=True):
    return [EvalQuery(query_id=f"q{i}", audio_path=str(p),
                      text=f"question {i}" if with_text else None)
            for i, p in enumerate(paths)]


class TestRunRetrievalEval:
    def test_all_relevant_saturates_metrics(self, tmp_path):
        corpus = build_mini_corpus(tmp_path)
        judge = StubJudgeClient(StubPolicy(judge_script=1))
        row = run_retrieval_eval(
            make_queries(corpus["queries"]), corpus["index"], corpus["store"], judge, "sr",
            embedder=corpus["backend"], k=5)
        assert row.recall_at_10 == 1.0
        assert row.ndcg_at_10 == 1.0
        assert row.undefined_count == 0
        assert row.setup == "cosine (SR)"

    def test_nothing_relevant_counts_undefined(self, tmp_path):
        corpus = build_mini_corpus(tmp_path)
        judge = StubJudgeClient(StubPolicy(judge_script=0))
        row = run_retrieval_eval(
            make_queries(corpus["queries"]), corpus["index"], corpus["store"], judge, "vr",
            embedder=corpus["backend"], k=5)
        assert row.recall_at_10 == 0.0
        assert row.ndcg_at_10 == 0.0
        assert row.undefined_count == len(corpus["queries"])

    def test_self_query_hits_itself_first(self, tmp_path):
        corpus = build_mini_corpus(tmp_path)
        script = {}
        for qi in range(len(corpus["queries"])):
            for si in range(len(corpus["segments"])):
                script[(f"q{qi}", f"ep0_seg{si}")] = 1 if qi == si else 0
        judge = StubJudgeClient(StubPolicy(judge_script=script))
        row = run_retrieval_eval(
            make_queries(corpus["queries"]), corpus["index"], corpus["store"], judge, "vr",
            embedder=corpus["backend"], k=5)
        # the only relevant doc is the self match at rank 1, so both metrics hit 1
        assert row.recall_at_10 == 1.0
        assert row.ndcg_at_10 == 1.0

    def test_rerank_setup_label(self, tmp_path):
        from voxrag.stubs import LengthReranker

        corpus = build_mini_corpus(tmp_path)
        judge = StubJudgeClient(StubPolicy(judge_script=1))
        row = run_retrieval_eval(
            make_queries(corpus["queries"]), corpus["index"], corpus["store"], judge, "sr",
            embedder=corpus["backend"], with_rerank=True, reranker=LengthReranker(), k=5)
        assert row.setup == "cosine+CE (SR)"

    def test_cache_makes_rerun_judge_free(self, tmp_path):
        corpus = build_mini_corpus(tmp_path)
        cache_path = tmp_path / "cache.jsonl"
        queries = make_queries(corpus["queries"])
        judge = StubJudgeClient(StubPolicy(seed=1))
        row1 = run_retrieval_eval(queries, corpus["index"], corpus["store"], judge, "vr",
                                  embedder=corpus["backend"], k=5,
                                  cache=JudgmentCache(cache_path))
        # a strict judge with no script would raise on any real call
        broken = StubJudgeClient(StubPolicy(judge_script={}))
        row2 = run_retrieval_eval(queries, corpus["index"], corpus["store"], broken, "vr",
                                  embedder=corpus["backend"], k=5,
                                  cache=JudgmentCache(cache_path))
        assert row1 == row2

    def test_cache_file_schema(self, tmp_path):
        import json

        corpus = build_mini_corpus(tmp_path, n=3)
        cache_path = tmp_path / "cache.jsonl"
        judge = StubJudgeClient(StubPolicy(seed=1))
        run_retrieval_eval(make_queries(corpus["queries"]), corpus["index"], corpus["store"],
                           judge, "sr", embedder=corpus["backend"], k=3,
                           cache=JudgmentCache(cache_path))
        rows = [json.loads(line) for line in cache_path.read_text().splitlines()]
        assert rows
        for row in rows:
            assert set(row) == {"query_id", "segment_id", "mode", "label", "raw_reply",
                                "judge_model", "prompt_hash"}
            assert row["mode"] == "sr"
            assert row["judge_model"] == "stub-judge"

    def test_frozen_cache_gives_byte_identical_reports(self, tmp_path):
        corpus = build_mini_corpus(tmp_path)
        cache_path = tmp_path / "cache.jsonl"
        queries = make_queries(corpus["queries"])
        judge = StubJudgeClient(StubPolicy(seed=2))
        outputs = []
        for run in range(2):
            row = run_retrieval_eval(queries, corpus["index"], corpus["store"], judge, "vr",
                                     embedder=corpus["backend"], k=5,
                                     cache=JudgmentCache(cache_path))
            outdir = tmp_path / f"report{run}"
            write_retrieval_report([row], outdir, meta=standard_meta(judge, mode="vr"))
            outputs.append((outdir / "table1.csv").read_bytes()
                           + (outdir / "meta.json").read_bytes())
        assert outputs[0] == outputs[1]


class TestRetries:
    def test_retries_then_succeeds(self):
        attempts = []

        def flaky():
            attempts.append(1)
            if len(attempts) < 3:
                raise BackendUnavailable("transient")
            return "ok"

        assert call_with_retries(flaky, attempts=3, base_delay=0.001) == "ok"
        assert len(attempts) == 3

    def test_exhausted_retries_raise(self):
        def always_down():
            raise BackendUnavailable("down")

        with pytest.raises(BackendUnavailable):
            call_with_retries(always_down, attempts=2, base_delay=0.001)


def items_for(n):
    return [AnswerEvalItem(query_id=f"q{i}", query_text=f"question {i}",
                           answer_text=f"answer {i}", documents=[f"doc {i}"])
            for i in range(n)]


class TestRunAnswerEval:
    def test_perfect_scores_flag_degenerate(self):
        script = {f"q{i}": {"relevance": 2, "accuracy": 2, "completeness": 2, "precision": 2}
                  for i in range(6)}
        judge = StubJudgeClient(StubPolicy(answer_script=script))
        report = run_answer_eval(items_for(6), judge)
        for row in report.rows:
            assert row.mean == 2.0
            if row.metric != "relevance":
                assert row.delta_vs_relevance == 0.0
                assert row.degenerate
                assert row.cohen_d is None and row.p_value is None

    def test_engineered_effect_matches_hand_formula(self):
        # relevance fixed at 2; accuracy alternates 1/2 -> diffs half 1, half 0
        script = {}
        n = 10
        for i in range(n):
            script[f"q{i}"] = {"relevance": 2, "accuracy": 2 - (i % 2),
                               "completeness": 2 - (i % 2), "precision": i % 3 % 2}
        judge = StubJudgeClient(StubPolicy(answer_script=script))
        report = run_answer_eval(items_for(n), judge)
        accuracy = next(r for r in report.rows if r.metric == "accuracy")
        diffs = [1.0 if i % 2 else 0.0 for i in range(n)]
        m = sum(diffs) / n
        sd = math.sqrt(sum((d - m) ** 2 for d in diffs) / (n - 1))
        assert accuracy.cohen_d == pytest.approx(m / sd, abs=1e-12)
        assert accuracy.delta_vs_relevance == pytest.approx(-m, abs=1e-12)

    def test_correlation_matrix_diagonal_and_symmetry(self):
        judge = StubJudgeClient(StubPolicy(seed=7))
        report = run_answer_eval(items_for(24), judge)
        dims = ("relevance", "accuracy", "completeness", "precision")
        for a in dims:
            assert report.correlations[(a, a)] == 1.0
            for b in dims:
                va, vb = report.correlations[(a, b)], report.correlations[(b, a)]
                if va is None:
                    assert vb is None
                else:
                    assert va == pytest.approx(vb, abs=1e-12)
                    assert -1.0 <= va <= 1.0


class TestBuildStatsReport:
    def test_significance_direction(self):
        # accuracy clearly lower than relevance with variance in the diffs
        scores = []
        for i in range(20):
            scores.append(AnswerScores(relevance=2, accuracy=(i % 2), completeness=2,
                                       precision=2 - (i % 2)))
        report = build_stats_report(scores, alpha=0.05)
        accuracy = next(r for r in report.rows if r.metric == "accuracy")
        assert accuracy.delta_vs_relevance < 0
        assert accuracy.p_value < 0.05
        assert accuracy.significantly_lower is True

    def test_report_files_deterministic(self, tmp_path):
        scores = [AnswerScores(2, 1, 1, 0), AnswerScores(1, 1, 2, 0), AnswerScores(2, 0, 1, 1),
                  AnswerScores(0, 1, 1, 2)]
        report = build_stats_report(scores)
        write_answer_report(report, tmp_path / "a")
        write_answer_report(report, tmp_path / "b")
        assert (tmp_path / "a" / "table2.csv").read_bytes() == \
               (tmp_path / "b" / "table2.csv").read_bytes()
        assert (tmp_path / "a" / "correlations.csv").read_bytes() == \
               (tmp_path / "b" / "correlations.csv").read_bytes()

    def test_table2_header(self, tmp_path):
        scores = [AnswerScores(2, 1, 1, 0), AnswerScores(1, 2, 1, 1)]
        report = build_stats_report(scores)
        write_answer_report(report, tmp_path)
        lines = (tmp_path / "table2.csv").read_text().splitlines()
        assert lines[0] == "metric,mean,std,delta,d,p,significant"
        assert len(lines) == 5
