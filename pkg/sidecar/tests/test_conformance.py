import base64
import math
import struct

import numpy as np
import pytest
from fastapi.testclient import TestClient

from voxrag_sidecar.app import create_app
from voxrag_sidecar.backends import SidecarConfig


def pcm16_wav(samples: np.ndarray, rate: int = 16000) -> bytes:
    ints = np.clip(np.rint(np.asarray(samples, dtype=np.float64) * 32768.0),
                   -32768, 32767).astype("<i2")
    raw = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(raw)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, rate, rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(raw))
    return header + raw


def tone(freq: float, duration_s: float, rate: int = 16000) -> np.ndarray:
    t = np.arange(int(duration_s * rate)) / rate
    return (0.4 * np.sin(2 * math.pi * freq * t)).astype(np.float32)


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(SidecarConfig(backend="hash", dim=64)))


class TestInfo:
    def test_reports_models_and_dim(self, client):
        body = client.get("/info").json()
        assert body["dim"] == 64
        assert set(body) == {"dim", "embed_model", "asr_model", "reranker"}


class TestEmbed:
    def test_vectors_have_declared_dim_and_finite_values(self, client):
        payloads = [base64.b64encode(pcm16_wav(tone(200 + 50 * i, 0.2))).decode()
                    for i in range(3)]
        body = client.post("/embed", json={"payloads": payloads}).json()
        assert body["dim"] == 64
        assert len(body["vectors"]) == 3
        for vec in body["vectors"]:
            assert len(vec) == body["dim"]
            assert all(math.isfinite(x) for x in vec)

    def test_identical_payloads_in_one_batch_identical_vectors(self, client):
        payload = base64.b64encode(pcm16_wav(tone(330, 0.3))).decode()
        other = base64.b64encode(pcm16_wav(tone(440, 0.3))).decode()
        body = client.post("/embed", json={"payloads": [payload, other, payload]}).json()
        assert body["vectors"][0] == body["vectors"][2]
        assert body["vectors"][0] != body["vectors"][1]

    def test_empty_batch(self, client):
        body = client.post("/embed", json={"payloads": []}).json()
        assert body == {"vectors": [], "dim": 64}

    def test_corrupt_wav_is_400(self, client):
        payload = base64.b64encode(b"definitely not a wav").decode()
        assert client.post("/embed", json={"payloads": [payload]}).status_code == 400

    def test_bad_base64_is_400(self, client):
        assert client.post("/embed", json={"payloads": ["@@@not-b64@@@"]}).status_code == 400

    def test_order_preserved(self, client):
        tones = [tone(200, 0.2), tone(900, 0.2)]
        payloads = [base64.b64encode(pcm16_wav(t)).decode() for t in tones]
        forward = client.post("/embed", json={"payloads": payloads}).json()["vectors"]
        backward = client.post("/embed", json={"payloads": payloads[::-1]}).json()["vectors"]
        assert forward[0] == backward[1]
        assert forward[1] == backward[0]


class TestTranscribe:
    def test_silence_gives_empty_text(self, client):
        wav = pcm16_wav(np.zeros(8000, dtype=np.float32))
        body = client.post("/transcribe", content=wav,
                           headers={"content-type": "audio/wav"}).json()
        assert body["text"].strip() == ""

    def test_speech_gives_nonempty_text(self, client):
        wav = pcm16_wav(tone(440, 0.5))
        body = client.post("/transcribe", content=wav,
                           headers={"content-type": "audio/wav"}).json()
        assert body["text"]

    def test_corrupt_wav_is_400(self, client):
        resp = client.post("/transcribe", content=b"garbage",
                           headers={"content-type": "audio/wav"})
        assert resp.status_code == 400


class TestRerank:
    def test_one_score_per_passage_order_preserved(self, client):
        body = client.post("/rerank", json={"query": "q", "passages": ["a", "b", "c"]}).json()
        assert len(body["scores"]) == 3
        again = client.post("/rerank", json={"query": "q", "passages": ["c", "b", "a"]}).json()
        assert body["scores"] == again["scores"][::-1]

    def test_duplicate_passages_equal_scores(self, client):
        body = client.post("/rerank", json={"query": "q", "passages": ["same", "same"]}).json()
        assert body["scores"][0] == body["scores"][1]

    def test_empty_passages_400(self, client):
        assert client.post("/rerank", json={"query": "q", "passages": []}).status_code == 400

    def test_hundred_passages_finite(self, client):
        passages = [f"passage {i}" for i in range(100)]
        body = client.post("/rerank", json={"query": "q", "passages": passages}).json()
        assert len(body["scores"]) == 100
        assert all(math.isfinite(s) for s in body["scores"])


class TestEngineRefusal:
    def test_engine_refuses_on_info_dim_mismatch(self):
        # the engine's sidecar client checks /info before indexing
        from voxrag.errors import DimensionMismatch
        from voxrag.sidecar import SidecarEmbedder

        app_client = TestClient(create_app(SidecarConfig(backend="hash", dim=256)))
        backend = SidecarEmbedder("http://testserver", dim=512, client=app_client)
        with pytest.raises(DimensionMismatch):
            backend.check_info()

    def test_engine_accepts_on_matching_dim(self):
        from voxrag.sidecar import SidecarEmbedder

        app_client = TestClient(create_app(SidecarConfig(backend="hash", dim=512)))
        backend = SidecarEmbedder("http://testserver", dim=512, client=app_client)
        info = backend.check_info()
        assert info["dim"] == 512

    def test_engine_embeds_through_sidecar(self):
        # full wire round trip with the primary engine's client
        from voxrag.audio import AudioBuffer
        from voxrag.embedding import embed_many
        from voxrag.sidecar import SidecarEmbedder

        app_client = TestClient(create_app(SidecarConfig(backend="hash", dim=32)))
        backend = SidecarEmbedder("http://testserver", dim=32, batch_size=2,
                                  client=app_client)
        buffers = [AudioBuffer(samples=tone(200 + i * 100, 0.2), sample_rate=16000)
                   for i in range(5)]
        out = embed_many([(f"s{i}", b) for i, b in enumerate(buffers)], backend)
        assert len(out) == 5
        for emb in out:
            assert emb.normalized
            assert abs(float(np.linalg.norm(emb.values)) - 1.0) <= 1e-5
