"""Filesystem segment store and the episode ingest pipeline.

Layout:
    root/
      episodes/<episode_id>.current   # pointer: name of the active generation dir
      episodes/<episode_id>.gen<N>/   # manifest.jsonl, embeddings.jsonl, audio/*.wav
      index.vox

An episode is replaced by writing a complete new generation directory and
then atomically swapping the pointer file, so a crash at any moment leaves
either the old or the new episode, never a torn one. The index file is
rebuilt after the swap; if a crash leaves it stale, open() rebuilds it from
the per-episode embedding files.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .audio import (AudioBuffer, load_audio, quantize_pcm16, resample, save_wav, to_mono,
                    detect_speech, import_spans)
from .config import EngineConfig
from .embedding import Embedding, EmbeddingBackend, embed_many, make_backend, EmbedderConfig
from .errors import CorruptStore, DimensionMismatch, UnknownSegmentId
from .index import Index
from .retrieval import TranscribeClient
from .segmentation import Segment, fuse, manifest_line, parse_manifest, parse_rttm, slice_audio

INDEX_FILENAME = "index.vox"

# test seam: called with a step label before each durability-relevant action
_fault_hook: Optional[Callable[[str], None]] = None


def _checkpoint(label: str) -> None:
    if _fault_hook is not None:
        _fault_hook(label)


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    _checkpoint(f"write:{path.name}")
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    _checkpoint(f"replace:{path.name}")
    os.replace(tmp, path)
    _fsync_dir(path.parent)


def _fsync_dir(path: Path) -> None:
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


@dataclass
class IngestSummary:
    episode_id: str
    segment_count: int
    duration_s: float
    speech_s: float


class SegmentStore:
    """Single-writer, many-reader store of segments, slices, and embeddings."""

    def __init__(self, root: str | Path, create: bool = False):
        self.root = Path(root)
        self.episodes_dir = self.root / "episodes"
        if create:
            self.episodes_dir.mkdir(parents=True, exist_ok=True)
        if not self.episodes_dir.is_dir():
            raise CorruptStore(f"{self.root} is not a store (missing episodes/)")
        self._segments: dict[str, Segment] = {}
        self._episode_dirs: dict[str, Path] = {}
        self._generation: dict[str, int] = {}
        self._gc_stray_generations()
        self._load_all()

    # -- loading ----------------------------------------------------------------

    def _pointer_path(self, episode_id: str) -> Path:
        return self.episodes_dir / f"{episode_id}.current"

    def _load_all(self) -> None:
        self._segments.clear()
        self._episode_dirs.clear()
        self._generation.clear()
        for pointer in sorted(self.episodes_dir.glob("*.current")):
            episode_id = pointer.name[:-len(".current")]
            gen_name = pointer.read_text(encoding="utf-8").strip()
            gen_dir = self.episodes_dir / gen_name
            if not gen_dir.is_dir():
                raise CorruptStore(f"episode {episode_id}: generation dir {gen_name} missing")
            match = re.search(r"\.gen(\d+)$", gen_name)
            self._generation[episode_id] = int(match.group(1)) if match else 0
            self._episode_dirs[episode_id] = gen_dir
            for seg in parse_manifest((gen_dir / "manifest.jsonl").read_text(encoding="utf-8")):
                if not (gen_dir / "audio" / f"{seg.segment_id}.wav").is_file():
                    raise CorruptStore(f"segment {seg.segment_id} has no audio slice")
                self._segments[seg.segment_id] = seg

    def _gc_stray_generations(self) -> None:
        referenced = set()
        for pointer in self.episodes_dir.glob("*.current"):
            referenced.add(pointer.read_text(encoding="utf-8").strip())
        for entry in self.episodes_dir.iterdir():
            if entry.is_dir() and entry.name not in referenced:
                _rmtree(entry)
            elif entry.name.endswith(".tmp"):
                entry.unlink()

    # -- read access ------------------------------------------------------------

    def episode_ids(self) -> list[str]:
        return sorted(self._episode_dirs)

    def segments(self) -> list[Segment]:
        out = []
        for episode_id in self.episode_ids():
            gen_dir = self._episode_dirs[episode_id]
            out.extend(parse_manifest((gen_dir / "manifest.jsonl").read_text(encoding="utf-8")))
        return out

    def get_segment(self, segment_id: str) -> Segment:
        try:
            return self._segments[segment_id]
        except KeyError:
            raise UnknownSegmentId(f"segment {segment_id!r} not in store") from None

    def __contains__(self, segment_id: str) -> bool:
        return segment_id in self._segments

    def audio_path(self, segment_id: str) -> Path:
        seg = self.get_segment(segment_id)
        return self._episode_dirs[seg.episode_id] / "audio" / f"{segment_id}.wav"

    def segment_audio(self, segment_id: str) -> AudioBuffer:
        return load_audio(self.audio_path(segment_id))

    def embeddings(self) -> list[tuple[str, np.ndarray]]:
        """(segment_id, vector) pairs across episodes in deterministic order."""
        out = []
        for episode_id in self.episode_ids():
            path = self._episode_dirs[episode_id] / "embeddings.jsonl"
            for line in path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    row = json.loads(line)
                    out.append((row["id"], np.asarray(row["vector"], dtype=np.float32)))
        return out

    def episode_dim(self, episode_id: str) -> Optional[int]:
        """Embedding dimension of one episode (None when it has no segments)."""
        path = self._episode_dirs[episode_id] / "embeddings.jsonl"
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                return len(json.loads(line)["vector"])
        return None

    # -- mutation ----------------------------------------------------------------

    def replace_episode(
        self,
        episode_id: str,
        segments: list[Segment],
        slices: dict[str, AudioBuffer],
        vectors: dict[str, np.ndarray],
    ) -> None:
        """Write a complete new generation, then swap the pointer atomically."""
        generation = self._generation.get(episode_id, -1) + 1
        gen_name = f"{episode_id}.gen{generation}"
        gen_dir = self.episodes_dir / gen_name
        try:
            _checkpoint("write_generation")
            audio_dir = gen_dir / "audio"
            audio_dir.mkdir(parents=True)
            manifest = "".join(manifest_line(seg) + "\n" for seg in segments)
            (gen_dir / "manifest.jsonl").write_text(manifest, encoding="utf-8")
            emb_lines = []
            for seg in segments:
                save_wav(audio_dir / f"{seg.segment_id}.wav", slices[seg.segment_id])
                vector = [float(v) for v in vectors[seg.segment_id]]
                emb_lines.append(json.dumps({"id": seg.segment_id, "vector": vector}))
            (gen_dir / "embeddings.jsonl").write_text(
                "".join(line + "\n" for line in emb_lines), encoding="utf-8")
            _fsync_dir(gen_dir)
        except BaseException:
            if gen_dir.is_dir():
                _rmtree(gen_dir)
            raise
        old_dir = self._episode_dirs.get(episode_id)
        _checkpoint("swap_pointer")
        _atomic_write_bytes(self._pointer_path(episode_id), (gen_name + "\n").encode("utf-8"))
        self._generation[episode_id] = generation
        self._episode_dirs[episode_id] = gen_dir
        new_ids = {seg.segment_id for seg in segments}
        stale = [seg_id for seg_id, seg in self._segments.items()
                 if seg.episode_id == episode_id and seg_id not in new_ids]
        for seg_id in stale:
            del self._segments[seg_id]
        for seg in segments:
            self._segments[seg.segment_id] = seg
        if old_dir is not None:
            _rmtree(old_dir)

    # -- index -------------------------------------------------------------------

    @property
    def index_path(self) -> Path:
        return self.root / INDEX_FILENAME

    def rebuild_index(self, dim: Optional[int] = None) -> Index:
        entries = [
            (seg_id, Embedding(values=vec, dim=len(vec), normalized=True))
            for seg_id, vec in self.embeddings()
        ]
        index = Index.build(entries, dim=dim)
        _checkpoint("write_index")
        index.save(self.index_path)
        return index

    def load_index(self, dim: Optional[int] = None) -> Index:
        """Load the persisted index, rebuilding when missing or out of sync."""
        if self.index_path.is_file():
            index = Index.load(self.index_path)
            if set(index.ids) == {seg_id for seg_id, _ in self.embeddings()}:
                return index
        return self.rebuild_index(dim=dim)


def _rmtree(path: Path) -> None:
    for child in sorted(path.iterdir(), reverse=True):
        if child.is_dir():
            _rmtree(child)
        else:
            child.unlink()
    path.rmdir()


def _default_episode_id(audio_path: str | Path) -> str:
    stem = Path(audio_path).stem
    return re.sub(r"[^A-Za-z0-9_-]+", "_", stem) or "episode"


def _read_transcript_rows(path: str | Path) -> dict[str, str]:
    rows = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            row = json.loads(line)
            rows[row["segment_id"]] = row["text"]
    return rows


def ingest_episode(
    store: SegmentStore,
    cfg: EngineConfig,
    audio_path: str | Path,
    *,
    rttm_path: Optional[str | Path] = None,
    transcripts_path: Optional[str | Path] = None,
    spans_path: Optional[str | Path] = None,
    episode_id: Optional[str] = None,
    embedder: Optional[EmbeddingBackend] = None,
    transcriber: Optional[TranscribeClient] = None,
) -> IngestSummary:
    """Run decode -> mono -> resample -> VAD -> fuse -> slice -> embed -> persist.

    Re-ingesting an episode_id replaces it atomically; failures leave the
    store at its previous state. Slices are embedded after PCM16
    quantization, so a stored slice used as a query lands on the exact
    indexed vector.
    """
    episode_id = episode_id or _default_episode_id(audio_path)
    buf = resample(to_mono(load_audio(audio_path)), cfg.pipeline_rate)
    if spans_path is not None:
        spans = import_spans(spans_path)
    else:
        spans = detect_speech(buf, cfg.vad)
    turns = parse_rttm(Path(rttm_path).read_text(encoding="utf-8")) if rttm_path else []
    segments = fuse(spans, turns, episode_id=episode_id,
                    max_segment_s=cfg.max_segment_s, merge_gap_s=cfg.merge_gap_s)

    slices: dict[str, AudioBuffer] = {}
    for seg in segments:
        raw = slice_audio(buf, seg)
        slices[seg.segment_id] = AudioBuffer(samples=quantize_pcm16(raw.samples),
                                             sample_rate=raw.sample_rate, channel_count=1)

    if embedder is None:
        embedder = make_backend(EmbedderConfig(backend="stub", dim=cfg.dim, seed=cfg.seed))
    embedded = embed_many([(seg.segment_id, slices[seg.segment_id]) for seg in segments],
                          embedder)
    vectors = {seg.segment_id: emb.values for seg, emb in zip(segments, embedded)}

    transcripts: dict[str, str] = {}
    if transcriber is not None and cfg.transcribe_on_ingest:
        for seg in segments:
            transcripts[seg.segment_id] = transcriber.transcribe(slices[seg.segment_id])
    if transcripts_path is not None:
        transcripts.update(_read_transcript_rows(transcripts_path))
    for seg in segments:
        seg.transcript = transcripts.get(seg.segment_id)

    if segments:
        for other_id in store.episode_ids():
            if other_id == episode_id:
                continue
            other_dim = store.episode_dim(other_id)
            if other_dim is not None and other_dim != embedded[0].dim:
                raise DimensionMismatch(
                    f"episode {other_id} is indexed at dim {other_dim}, "
                    f"new embeddings have dim {embedded[0].dim}")

    store.replace_episode(episode_id, segments, slices, vectors)
    store.rebuild_index(dim=cfg.dim if segments else None)
    return IngestSummary(
        episode_id=episode_id,
        segment_count=len(segments),
        duration_s=buf.duration_s,
        speech_s=sum(span.end_s - span.start_s for span in spans),
    )
