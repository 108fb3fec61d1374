import json

import pytest

from voxrag.cli import main


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


@pytest.fixture
def ingested(tmp_path, fixture_episode, capsys):
    store_dir = tmp_path / "store"
    cfg_path = tmp_path / "engine.cfg"
    cfg_path.write_text("[embedding]\ndim = 64\n[transcribe]\non_ingest = true\n",
                        encoding="utf-8")
    code, body = run_cli(capsys, [
        "ingest", str(fixture_episode["wav"]), "--rttm", str(fixture_episode["rttm"]),
        "--episode-id", "ep1", "--store", str(store_dir), "--config", str(cfg_path)])
    assert code == 0
    return {"store": store_dir, "config": cfg_path, "summary": body}


class TestIngestCommand:
    def test_summary_shape(self, ingested):
        body = ingested["summary"]
        assert body["episode_id"] == "ep1"
        assert body["segment_count"] == 33

    def test_missing_audio_fails_cleanly(self, tmp_path, capsys):
        code = main(["ingest", str(tmp_path / "nope.wav"), "--store", str(tmp_path / "s")])
        assert code == 1
        assert "NotFound" in capsys.readouterr().err


class TestQueryCommand:
    def test_query_own_segment(self, ingested, capsys):
        from voxrag.store import SegmentStore

        store = SegmentStore(ingested["store"])
        audio = store.audio_path("ep1_seg4")
        code, body = run_cli(capsys, [
            "query", "--audio", str(audio), "--store", str(ingested["store"]),
            "--config", str(ingested["config"]), "--k", "5"])
        assert code == 0
        assert body["hits"][0]["segment_id"] == "ep1_seg4"
        assert len(body["hits"]) == 5

    def test_query_with_explicit_index_path(self, ingested, capsys):
        from voxrag.store import SegmentStore

        store = SegmentStore(ingested["store"])
        code, body = run_cli(capsys, [
            "query", "--audio", str(store.audio_path("ep1_seg0")),
            "--index", str(store.index_path), "--store", str(ingested["store"]),
            "--config", str(ingested["config"])])
        assert code == 0
        assert body["hits"][0]["segment_id"] == "ep1_seg0"

    def test_rerank_flag(self, ingested, capsys):
        from voxrag.store import SegmentStore

        store = SegmentStore(ingested["store"])
        code, body = run_cli(capsys, [
            "query", "--audio", str(store.audio_path("ep1_seg1")), "--rerank",
            "--store", str(ingested["store"]), "--config", str(ingested["config"])])
        assert code == 0
        assert body["reranked"] is True


class TestAnswerCommand:
    def test_answer_includes_segments(self, ingested, capsys):
        from voxrag.store import SegmentStore

        store = SegmentStore(ingested["store"])
        code, body = run_cli(capsys, [
            "answer", "--query-audio", str(store.audio_path("ep1_seg2")),
            "--text", "what happened here?",
            "--store", str(ingested["store"]), "--config", str(ingested["config"])])
        assert code == 0
        assert body["answer"] == "Question: what happened here?"
        assert body["prompt_hash"]
        assert any(s["rank"] == 1 for s in body["segments"])


class TestEvalCommands:
    def test_eval_retrieval_and_report(self, ingested, tmp_path, capsys):
        from voxrag.store import SegmentStore

        store = SegmentStore(ingested["store"])
        queries_path = tmp_path / "queries.jsonl"
        rows = [{"query_id": f"q{i}", "audio": str(store.audio_path(f"ep1_seg{i}")),
                 "text": f"question {i}"} for i in range(3)]
        queries_path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
        report_dir = tmp_path / "report"
        code, body = run_cli(capsys, [
            "eval-retrieval", "--mode", "vr", "--queries", str(queries_path),
            "--cache", str(tmp_path / "cache.jsonl"), "--report", str(report_dir),
            "--store", str(ingested["store"]), "--config", str(ingested["config"])])
        assert code == 0
        assert body["setup"] == "cosine (VR)"
        assert (report_dir / "table1.csv").exists()
        assert (tmp_path / "cache.jsonl").exists()

    def test_eval_answers(self, ingested, tmp_path, capsys):
        items_path = tmp_path / "items.jsonl"
        rows = [{"query_id": f"q{i}", "query_text": f"question {i}",
                 "answer_text": "some answer", "documents": ["d"]} for i in range(4)]
        items_path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
        code, body = run_cli(capsys, [
            "eval-answers", "--items", str(items_path),
            "--store", str(ingested["store"]), "--config", str(ingested["config"])])
        assert code == 0
        assert body["n"] == 4
        assert len(body["rows"]) == 4


class TestParser:
    def test_requires_command(self, capsys):
        with pytest.raises(SystemExit):
            main([])

    def test_spec_shape_query_invocation(self, ingested, capsys):
        # the documented invocation shape: voxrag query --index P --store P --audio F --k 10
        from voxrag.store import SegmentStore

        store = SegmentStore(ingested["store"])
        code, body = run_cli(capsys, [
            "query", "--index", str(store.index_path), "--store", str(ingested["store"]),
            "--audio", str(store.audio_path("ep1_seg0")), "--k", "10",
            "--config", str(ingested["config"])])
        assert code == 0
