"""Engine configuration: one object shared by every pipeline variant.

Loadable from an INI-style file of key=value sections; anything not set
falls back to the defaults below. Chat credentials come from the
CHAT_ENDPOINT / CHAT_MODEL / CHAT_API_KEY environment variables unless
overridden in the file.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .audio import PIPELINE_RATE, VadConfig
from .embedding import DEFAULT_DIM
from .generation import DEFAULT_INSTRUCTION


@dataclass
class EngineConfig:
    pipeline_rate: int = PIPELINE_RATE
    max_segment_s: float = 90.0
    merge_gap_s: float = 1.0
    k: int = 10
    dim: int = DEFAULT_DIM
    seed: int = 0

    vad_frame_ms: int = 30
    vad_threshold_db: float = -40.0
    vad_min_silence_ms: int = 300
    vad_min_speech_ms: int = 250

    embed_backend: str = "stub"  # stub | file | sidecar
    sidecar_endpoint: Optional[str] = None
    vector_file: Optional[str] = None
    embed_batch: int = 16
    embed_inflight: int = 4

    rerank_backend: str = "stub"  # stub | sidecar | none
    transcriber_backend: str = "stub"  # stub | sidecar | none
    transcribe_on_ingest: bool = False

    chat_backend: str = "stub"  # stub | http
    chat_endpoint: Optional[str] = None
    chat_model: Optional[str] = None
    chat_api_key: Optional[str] = None

    judge_backend: str = "stub"  # stub | http
    judge_endpoint: Optional[str] = None
    judge_model: Optional[str] = None
    judge_inflight: int = 4
    judge_retries: int = 3

    instruction: str = DEFAULT_INSTRUCTION
    alpha: float = 0.05

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        positive = ("pipeline_rate", "max_segment_s", "merge_gap_s", "k", "dim",
                    "vad_frame_ms", "vad_min_silence_ms", "vad_min_speech_ms",
                    "embed_batch", "embed_inflight", "judge_inflight", "judge_retries")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"config field {name} must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        for name in ("embed_backend", "rerank_backend", "transcriber_backend",
                     "chat_backend", "judge_backend"):
            if not getattr(self, name):
                raise ValueError(f"config field {name} must be set")

    @property
    def vad(self) -> VadConfig:
        return VadConfig(frame_ms=self.vad_frame_ms, threshold_db=self.vad_threshold_db,
                         min_silence_ms=self.vad_min_silence_ms,
                         min_speech_ms=self.vad_min_speech_ms)


_SECTION_MAP = {
    ("pipeline", "rate"): "pipeline_rate",
    ("pipeline", "max_segment_s"): "max_segment_s",
    ("pipeline", "merge_gap_s"): "merge_gap_s",
    ("pipeline", "k"): "k",
    ("pipeline", "seed"): "seed",
    ("vad", "frame_ms"): "vad_frame_ms",
    ("vad", "threshold_db"): "vad_threshold_db",
    ("vad", "min_silence_ms"): "vad_min_silence_ms",
    ("vad", "min_speech_ms"): "vad_min_speech_ms",
    ("embedding", "backend"): "embed_backend",
    ("embedding", "dim"): "dim",
    ("embedding", "endpoint"): "sidecar_endpoint",
    ("embedding", "path"): "vector_file",
    ("embedding", "batch"): "embed_batch",
    ("embedding", "inflight"): "embed_inflight",
    ("rerank", "backend"): "rerank_backend",
    ("transcribe", "backend"): "transcriber_backend",
    ("transcribe", "on_ingest"): "transcribe_on_ingest",
    ("chat", "backend"): "chat_backend",
    ("chat", "endpoint"): "chat_endpoint",
    ("chat", "model"): "chat_model",
    ("chat", "api_key"): "chat_api_key",
    ("judge", "backend"): "judge_backend",
    ("judge", "endpoint"): "judge_endpoint",
    ("judge", "model"): "judge_model",
    ("judge", "inflight"): "judge_inflight",
    ("judge", "retries"): "judge_retries",
    ("generation", "instruction"): "instruction",
    ("eval", "alpha"): "alpha",
}

_BOOL_VALUES = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def load_config(path: Optional[str | Path] = None, **overrides) -> EngineConfig:
    """Build an EngineConfig from a config file plus keyword overrides."""
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        types = {f.name: f.type for f in fields(EngineConfig)}
        for section in parser.sections():
            for key, raw in parser.items(section):
                try:
                    name = _SECTION_MAP[(section, key)]
                except KeyError:
                    raise ValueError(f"unknown config key [{section}] {key}") from None
                values[name] = _coerce(raw, types[name])
    values.setdefault("chat_endpoint", os.environ.get("CHAT_ENDPOINT"))
    values.setdefault("chat_model", os.environ.get("CHAT_MODEL"))
    values.setdefault("chat_api_key", os.environ.get("CHAT_API_KEY"))
    values.update(overrides)
    return EngineConfig(**values)


def _coerce(raw: str, type_hint: str):
    raw = raw.strip()
    if type_hint == "int":
        return int(raw)
    if type_hint == "float":
        return float(raw)
    if type_hint == "bool":
        try:
            return _BOOL_VALUES[raw.lower()]
        except KeyError:
            raise ValueError(f"not a boolean: {raw!r}") from None
    return raw
