#!/usr/bin/env python3
"""Build a stub-backend fixture store for the console integration test.

Usage: make_fixture.py OUT_DIR
Prints JSON: store dir, engine config, a query wav identical to one stored
segment's audio, that segment's id, and its manifest duration.
"""

import json
import sys
from pathlib import Path

import numpy as np

from voxrag.audio import AudioBuffer, save_wav
from voxrag.config import load_config
from voxrag.engine import Engine
from voxrag.store import SegmentStore


def tone(freq, duration_s, rate=16000, amplitude=0.3):
    t = np.arange(int(round(duration_s * rate))) / rate
    return (amplitude * np.sin(2 * np.pi * freq * t)).astype(np.float32)


def main():
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)

    rate = 16000
    pieces = [np.zeros(rate, dtype=np.float32)]
    for i in range(8):
        pieces.append(tone(220.0 + 90.0 * i, 4.0 + 0.25 * i))
        pieces.append(np.zeros(int(2.0 * rate), dtype=np.float32))
    episode = AudioBuffer(samples=np.concatenate(pieces), sample_rate=rate)
    wav_path = out / "episode.wav"
    save_wav(wav_path, episode)

    config_path = out / "engine.cfg"
    config_path.write_text(
        "[embedding]\nbackend = stub\ndim = 64\n"
        "[transcribe]\nbackend = stub\non_ingest = true\n",
        encoding="utf-8")

    store_dir = out / "store"
    store = SegmentStore(store_dir, create=True)
    engine = Engine(store, load_config(config_path))
    engine.ingest(wav_path, episode_id="ep1")

    probe = store.segments()[2]
    query_path = out / "query.wav"
    query_path.write_bytes(store.audio_path(probe.segment_id).read_bytes())

    print(json.dumps({
        "store": str(store_dir),
        "config": str(config_path),
        "query_wav": str(query_path),
        "rank1": probe.segment_id,
        "duration_s": probe.end_s - probe.start_s,
        "segment_count": len(store.segments()),
    }))


if __name__ == "__main__":
    main()
