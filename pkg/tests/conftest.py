"""Shared fixtures: deterministic synthetic audio and a small fixture episode."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from voxrag.audio import AudioBuffer, save_wav

RATE = 16000


def tone(freq: float, duration_s: float, rate: int = RATE, amplitude: float = 0.3,
         phase: float = 0.0) -> np.ndarray:
    t = np.arange(int(round(duration_s * rate))) / rate
    return (amplitude * np.sin(2 * np.pi * freq * t + phase)).astype(np.float32)


def silence(duration_s: float, rate: int = RATE) -> np.ndarray:
    return np.zeros(int(round(duration_s * rate)), dtype=np.float32)


def buffer_of(samples: np.ndarray, rate: int = RATE, channels: int = 1) -> AudioBuffer:
    return AudioBuffer(samples=np.asarray(samples, dtype=np.float32), sample_rate=rate,
                       channel_count=channels)


FIXTURE_DURATION_S = 300.0


def _make_fixture_layout():
    """Five-minute synthetic episode layout, stable across library versions.

    Bursts are tone spans with gaps both under the 1.0 s merge threshold
    (0.4/0.5 s, so pieces merge) and well over it; speaker turns rotate every
    20-40 s so fusion cuts inside long runs.
    """
    import random

    rng = random.Random(2024)
    bursts = []
    t = 1.0
    while True:
        dur = round(rng.uniform(2.5, 9.0), 2)
        if t + dur > FIXTURE_DURATION_S - 2.0:
            break
        bursts.append((round(t, 2), dur, round(rng.uniform(150.0, 1400.0), 1)))
        t += dur + rng.choice([0.4, 0.5, 1.6, 2.5, 4.0])
    turns = []
    edge = 0.0
    speakers = ["spkA", "spkB", "spkC"]
    i = 0
    while edge < FIXTURE_DURATION_S:
        dur = round(rng.uniform(20.0, 40.0), 2)
        turns.append((edge, min(edge + dur, FIXTURE_DURATION_S), speakers[i % 3]))
        edge += dur
        i += 1
    return bursts, turns


FIXTURE_BURSTS, FIXTURE_TURNS = _make_fixture_layout()


def build_fixture_audio() -> AudioBuffer:
    samples = silence(FIXTURE_DURATION_S)
    for start, dur, freq in FIXTURE_BURSTS:
        i = int(round(start * RATE))
        burst = tone(freq, dur)
        samples[i:i + len(burst)] = burst
    return buffer_of(samples)


def build_fixture_rttm() -> str:
    lines = []
    for start, end, speaker in FIXTURE_TURNS:
        lines.append(f"SPEAKER ep1 1 {start:.2f} {end - start:.2f} <NA> <NA> {speaker} <NA> <NA>")
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def fixture_episode(tmp_path_factory) -> dict:
    """Synthetic episode on disk: wav + rttm, deterministic content."""
    root = tmp_path_factory.mktemp("fixture_episode")
    wav_path = root / "ep1.wav"
    save_wav(wav_path, build_fixture_audio())
    rttm_path = root / "ep1.rttm"
    rttm_path.write_text(build_fixture_rttm(), encoding="utf-8")
    return {"wav": wav_path, "rttm": rttm_path, "dir": root}


class LinearStore:
    """Minimal SegmentLookup: a linked chain of segments for one episode."""

    def __init__(self, segments):
        self.segs = list(segments)
        self._by_id = {s.segment_id: s for s in self.segs}

    def get_segment(self, segment_id):
        from voxrag.errors import UnknownSegmentId

        try:
            return self._by_id[segment_id]
        except KeyError:
            raise UnknownSegmentId(segment_id) from None


def build_mini_corpus(tmp_path, n=8, dim=32, seed=0):
    """Tiny in-memory corpus: n tone 'segments', stub embeddings, query wavs.

    Query i's audio is byte-identical to document i's, so cosine rank 1 for
    query i is segment i by construction.
    """
    from voxrag.audio import quantize_pcm16
    from voxrag.embedding import embed_many
    from voxrag.index import Index
    from voxrag.segmentation import Segment, link_neighbors
    from voxrag.stubs import StubEmbedder

    backend = StubEmbedder(dim=dim, seed=seed)
    buffers = []
    segments = []
    for i in range(n):
        samples = quantize_pcm16(tone(200.0 + 45.0 * i, 0.3 + 0.02 * i))
        buffers.append(buffer_of(samples))
        seg = Segment(f"ep0_seg{i}", "ep0", float(i), float(i + 1), f"spk{i % 3}",
                      transcript=f"segment {i} transcript " + "x" * i)
        segments.append(seg)
    link_neighbors(segments)
    embeddings = embed_many([(s.segment_id, b) for s, b in zip(segments, buffers)], backend)
    index = Index.build(list(zip([s.segment_id for s in segments], embeddings)))
    query_paths = []
    for i, buf in enumerate(buffers):
        path = tmp_path / f"query{i}.wav"
        save_wav(path, buf)
        query_paths.append(path)
    return {"store": LinearStore(segments), "index": index, "backend": backend,
            "queries": query_paths, "segments": segments}


def write_transcripts(store, path: Path, episode_id: str = "ep1") -> Path:
    """Deterministic per-segment transcripts keyed by segment id."""
    rows = []
    for seg in store.segments():
        if seg.episode_id != episode_id:
            continue
        n = int(seg.segment_id.rsplit("seg", 1)[1])
        words = " ".join(f"word{n}{chr(97 + (n + j) % 7)}" for j in range(3 + n % 4))
        rows.append({"segment_id": seg.segment_id, "text": f"{seg.speaker_id} talks about {words}"})
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path
