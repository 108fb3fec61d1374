"""LLM-as-a-judge protocols: binary segment relevance and 0-2 answer grading.

The rubric prompts are shipped as text files next to this module and
hash-pinned into reports, so every judgment is attributable to the exact
rubric text that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from ..errors import OutOfRangeScore, UnparseableReply
from ..generation import ChatClient

MODES = ("vr", "sr")

ANSWER_DIMENSIONS = ("relevance", "accuracy", "completeness", "precision")

_PROMPT_FILES = {"vr": "relevance_vr.txt", "sr": "relevance_sr.txt", "answer": "answer_judge.txt"}

RELEVANCE_USER_TEMPLATE = "User question:\n{query}\n\nTranscript segment:\n{transcript}"


def load_judge_prompt(name: str) -> str:
    try:
        filename = _PROMPT_FILES[name]
    except KeyError:
        raise ValueError(f"unknown judge prompt {name!r}") from None
    return resources.files("voxrag.evaluation").joinpath("prompts", filename).read_text("utf-8")


def judge_prompt_hash(name: str) -> str:
    return hashlib.sha256(load_judge_prompt(name).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RelevanceJudgment:
    query_id: str
    segment_id: str
    mode: str  # "vr" or "sr"
    label: int  # 0 or 1
    raw_reply: str


@dataclass(frozen=True)
class AnswerScores:
    relevance: int
    accuracy: int
    completeness: int
    precision: int

    def as_dict(self) -> dict:
        return {dim: getattr(self, dim) for dim in ANSWER_DIMENSIONS}


def judge_relevance(
    query_text: str,
    segment_transcript: str,
    mode: str,
    judge: ChatClient,
    *,
    query_id: str = "",
    segment_id: str = "",
) -> RelevanceJudgment:
    """Ask for a 0/1 relevance label; the reply must be a bare digit after trimming."""
    mode = mode.lower()
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    messages = [
        {"role": "system", "content": load_judge_prompt(mode)},
        {"role": "user", "content": RELEVANCE_USER_TEMPLATE.format(
            query=query_text, transcript=segment_transcript)},
    ]
    reply = judge.complete(messages, tags={"kind": "relevance", "query_id": query_id,
                                           "segment_id": segment_id})
    token = reply.strip()
    if token not in ("0", "1"):
        raise UnparseableReply(f"expected a single digit 0 or 1, got {reply!r}")
    return RelevanceJudgment(query_id=query_id, segment_id=segment_id, mode=mode,
                             label=int(token), raw_reply=reply)


def build_answer_judge_prompt(query_text: str, documents: Sequence[str], answer_text: str) -> str:
    template = load_judge_prompt("answer")
    return (template
            .replace("{documents}", "\n\n".join(documents))
            .replace("{query}", query_text)
            .replace("{answer}", answer_text))


def parse_answer_scores(reply: str) -> AnswerScores:
    """Parse the last non-empty line as a JSON object with the four 0-2 scores."""
    lines = [line for line in reply.splitlines() if line.strip()]
    if not lines:
        raise UnparseableReply("empty judge reply")
    try:
        obj = json.loads(lines[-1])
    except json.JSONDecodeError as exc:
        raise UnparseableReply(f"last line is not JSON: {lines[-1]!r}") from exc
    if not isinstance(obj, dict):
        raise UnparseableReply(f"expected a JSON object, got {type(obj).__name__}")
    values = {}
    for dim in ANSWER_DIMENSIONS:
        if dim not in obj:
            raise UnparseableReply(f"missing key {dim!r} in {lines[-1]!r}")
        value = obj[dim]
        if isinstance(value, bool) or not isinstance(value, int):
            raise UnparseableReply(f"score {dim!r} is not an integer: {value!r}")
        if not 0 <= value <= 2:
            raise OutOfRangeScore(f"score {dim!r} = {value} outside 0-2")
        values[dim] = value
    return AnswerScores(**values)


def judge_answer(
    query_text: str,
    documents: Sequence[str],
    answer_text: str,
    judge: ChatClient,
    *,
    query_id: str = "",
) -> tuple[AnswerScores, str]:
    """Grade an answer on the four 0-2 axes; returns scores and the raw reply."""
    prompt = build_answer_judge_prompt(query_text, documents, answer_text)
    reply = judge.complete([{"role": "user", "content": prompt}],
                           tags={"kind": "answer", "query_id": query_id})
    return parse_answer_scores(reply), reply
