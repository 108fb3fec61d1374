"""Deterministic in-process substitutes for every external service.

These implement the same interfaces as the live clients (embedder, reranker,
transcriber, chat generator, judge) so the whole pipeline runs with zero
network or model dependencies. Same seed and script mean byte-identical
behavior.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .audio import AudioBuffer
from .errors import ScriptMiss

ANSWER_DIMENSIONS = ("relevance", "accuracy", "completeness", "precision")


def _hash64(payload: bytes, seed: int) -> int:
    digest = hashlib.blake2b(payload, digest_size=8, key=seed.to_bytes(8, "little")).digest()
    return int.from_bytes(digest, "little")


def stub_vector(sample_bytes: bytes, dim: int, seed: int) -> np.ndarray:
    """Expand a seeded 64-bit hash of the sample bytes into dim values in [-1, 1]."""
    state = _hash64(sample_bytes, seed).to_bytes(8, "little")
    blocks = []
    for i in range((dim * 8 + 63) // 64):
        blocks.append(hashlib.blake2b(state + i.to_bytes(4, "little"), digest_size=64).digest())
    words = np.frombuffer(b"".join(blocks), dtype="<u8")[:dim]
    return (words.astype(np.float64) / 2.0**63 - 1.0).astype(np.float32)


class StubEmbedder:
    """Embedding backend: a pure function of sample bytes and seed."""

    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def embed_batch(self, items: Sequence[tuple[Optional[str], AudioBuffer]]) -> list[np.ndarray]:
        return [stub_vector(buf.samples.tobytes(), self.dim, self.seed) for _key, buf in items]


@dataclass
class StubPolicy:
    """Scripted behavior for stub judges; unscripted keys fall back to a seeded hash."""

    seed: int = 0
    judge_script: Union[Mapping[tuple[str, str], int], int, None] = None
    answer_script: Optional[Mapping[str, Mapping[str, int]]] = None
    strict: bool = False


_RELEVANCE_SHAPES = ("{label}", " {label}", "{label}\n", "  {label}\n", "\n {label} ")


class StubJudgeClient:
    """Emits relevance digits and answer-score JSON in the judges' wire shapes.

    Reply decoration (leading whitespace, reasoning-then-JSON) is chosen
    deterministically from the key hash so parser robustness gets exercised.
    """

    model_id = "stub-judge"

    def __init__(self, policy: StubPolicy = StubPolicy()):
        self.policy = policy

    def complete(self, messages, *, tags=None) -> str:
        tags = tags or {}
        kind = tags.get("kind") or self._infer_kind(messages)
        if kind == "relevance":
            return self._relevance_reply(tags)
        if kind == "answer":
            return self._answer_reply(tags)
        raise ScriptMiss(f"stub judge cannot tell what is being judged (tags={tags})")

    @staticmethod
    def _infer_kind(messages) -> Optional[str]:
        text = " ".join(m.get("content", "") for m in messages)
        if "single digit" in text:
            return "relevance"
        if "SINGLE LINE JSON" in text:
            return "answer"
        return None

    def _key_hash(self, *parts: str) -> int:
        return _hash64("\x1f".join(parts).encode("utf-8"), self.policy.seed)

    def _relevance_reply(self, tags) -> str:
        key = (tags.get("query_id", ""), tags.get("segment_id", ""))
        script = self.policy.judge_script
        if isinstance(script, int):
            label = script
        elif script is not None and key in script:
            label = script[key]
        elif script is not None or self.policy.strict:
            raise ScriptMiss(f"no scripted label for {key}")
        else:
            label = self._key_hash("label", *key) & 1
        shape = _RELEVANCE_SHAPES[self._key_hash("shape", *key) % len(_RELEVANCE_SHAPES)]
        return shape.format(label=label)

    def _answer_reply(self, tags) -> str:
        query_id = tags.get("query_id", "")
        script = self.policy.answer_script
        if script is not None and query_id in script:
            scores = dict(script[query_id])
        elif script is not None or self.policy.strict:
            raise ScriptMiss(f"no scripted answer scores for {query_id!r}")
        else:
            scores = {dim: self._key_hash("score", query_id, dim) % 3 for dim in ANSWER_DIMENSIONS}
        line = json.dumps({dim: scores[dim] for dim in ANSWER_DIMENSIONS})
        if self._key_hash("reasoning", query_id) & 1:
            return f"Let me assess each dimension against the documents.\n{line}"
        return line


class EchoChatClient:
    """Generator stub: the answer is the last non-empty line of the user prompt."""

    model_id = "stub-chat"

    def complete(self, messages, *, tags=None) -> str:
        user = [m for m in messages if m.get("role") == "user"]
        text = user[-1]["content"] if user else ""
        lines = [line for line in text.splitlines() if line.strip()]
        return lines[-1] if lines else ""


class LengthReranker:
    """Scores each passage by its character length; ignores the query."""

    def score(self, query: str, passages: list[str]) -> list[float]:
        return [float(len(p)) for p in passages]


class ConstantReranker:
    def __init__(self, value: float = 0.0):
        self.value = value

    def score(self, query: str, passages: list[str]) -> list[float]:
        return [self.value] * len(passages)


@dataclass
class MappingReranker:
    scores: Mapping[str, float]
    default: float = 0.0

    def score(self, query: str, passages: list[str]) -> list[float]:
        return [float(self.scores.get(p, self.default)) for p in passages]


class StubTranscriber:
    """Deterministic placeholder text derived from the sample-byte hash."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def transcribe(self, buf: AudioBuffer) -> str:
        if len(buf.samples) == 0 or not np.any(buf.samples):
            return ""
        token = _hash64(buf.samples.tobytes(), self.seed)
        words = [f"w{(token >> shift) & 0xFFF:03x}" for shift in range(0, 48, 12)]
        return "spoken " + " ".join(words)
