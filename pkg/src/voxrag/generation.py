"""Prompt assembly from retrieved transcripts and answer generation.

The prompt layout is deterministic: instruction header, one numbered
speaker-labeled line per segment, then the question. Answers record the
generating model and a hash of the exact prompt sent.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import httpx

from .errors import BackendUnavailable, EmptyCompletion, MissingTranscript
from .segmentation import Segment

DEFAULT_INSTRUCTION = (
    "You are answering a question about a podcast. Use only the transcript "
    "segments below; each is numbered and labeled with its speaker. Cite the "
    "segments you rely on by number, e.g. (Segment 2). If the segments do not "
    "contain the answer, say so."
)


class ChatClient(Protocol):
    model_id: str

    def complete(self, messages: list[dict], *, tags: Optional[dict] = None) -> str: ...


@dataclass(frozen=True)
class Prompt:
    text: str
    segment_order: tuple[str, ...]


@dataclass(frozen=True)
class Answer:
    text: str
    model_id: str
    prompt_hash: str


def hash_prompt(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_prompt(query_text: str, segments: Sequence[Segment],
                 *, instruction: str = DEFAULT_INSTRUCTION) -> Prompt:
    """Deterministic prompt: byte-identical output for identical input."""
    lines = [instruction, ""]
    for i, seg in enumerate(segments, start=1):
        if seg.transcript is None:
            raise MissingTranscript(f"segment {seg.segment_id} has no transcript")
        lines.append(f"Segment {i} [{seg.speaker_id}]: {seg.transcript}")
    lines.append("")
    lines.append(f"Question: {query_text}")
    return Prompt(text="\n".join(lines),
                  segment_order=tuple(seg.segment_id for seg in segments))


def generate(prompt: Prompt, client: ChatClient) -> Answer:
    reply = client.complete([{"role": "user", "content": prompt.text}])
    if not reply or not reply.strip():
        raise EmptyCompletion(f"chat backend {client.model_id} returned an empty answer")
    return Answer(text=reply, model_id=client.model_id, prompt_hash=hash_prompt(prompt.text))


class HttpChatClient:
    """OpenAI-compatible chat-completion client.

    Configured from CHAT_ENDPOINT, CHAT_MODEL, and CHAT_API_KEY when built via
    from_env(). Temperature defaults to 0 for reproducible evaluation.
    """

    def __init__(self, endpoint: str, model_id: str, api_key: Optional[str] = None,
                 temperature: float = 0.0, timeout: float = 120.0,
                 client: Optional[httpx.Client] = None):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.temperature = temperature
        headers = {"authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(timeout=timeout, headers=headers)

    @classmethod
    def from_env(cls, **kwargs) -> "HttpChatClient":
        endpoint = os.environ.get("CHAT_ENDPOINT")
        model = os.environ.get("CHAT_MODEL")
        if not endpoint or not model:
            raise BackendUnavailable("CHAT_ENDPOINT and CHAT_MODEL must be set")
        return cls(endpoint, model, api_key=os.environ.get("CHAT_API_KEY"), **kwargs)

    def _url(self) -> str:
        if self.endpoint.endswith("/chat/completions"):
            return self.endpoint
        return self.endpoint + "/v1/chat/completions"

    def complete(self, messages, *, tags=None) -> str:
        body = {"model": self.model_id, "messages": messages, "temperature": self.temperature}
        try:
            resp = self._client.post(self._url(), json=body)
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"chat backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"chat backend returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, ValueError) as exc:
            raise BackendUnavailable(f"malformed chat completion response: {exc}") from exc
