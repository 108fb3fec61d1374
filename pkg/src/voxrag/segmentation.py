"""Speaker-attributed segmentation: RTTM parsing and span/turn fusion.

A segment is the retrieval unit: a duration-capped slice of one episode,
attributed to the speaker with the most overlap, linked to its neighbors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

from .audio import AudioBuffer, SpeechSpan, slice_buffer, validate_spans
from .errors import InvariantViolation, NegativeDuration, SpanParseError

UNKNOWN_SPEAKER = "UNK"

_CUT_EPS = 1e-9

MANIFEST_FIELDS = ("segment_id", "episode_id", "start_s", "end_s", "speaker_id",
                   "transcript", "prev_id", "next_id")


@dataclass(frozen=True)
class SpeakerTurn:
    start_s: float
    end_s: float
    speaker_id: str


@dataclass
class Segment:
    segment_id: str
    episode_id: str
    start_s: float
    end_s: float
    speaker_id: str
    transcript: Optional[str] = None
    prev_id: Optional[str] = None
    next_id: Optional[str] = None

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def to_manifest_dict(self) -> dict:
        return {name: getattr(self, name) for name in MANIFEST_FIELDS}

    @classmethod
    def from_manifest_dict(cls, row: dict) -> "Segment":
        return cls(**{name: row[name] for name in MANIFEST_FIELDS})


def manifest_line(seg: Segment) -> str:
    return json.dumps(seg.to_manifest_dict(), ensure_ascii=False)


def parse_manifest(text: str) -> list[Segment]:
    return [Segment.from_manifest_dict(json.loads(line))
            for line in text.splitlines() if line.strip()]


# -- RTTM ---------------------------------------------------------------------

def parse_rttm(text: str) -> list[SpeakerTurn]:
    """Parse RTTM SPEAKER records into turns sorted by start time.

    Record layout: SPEAKER <file> <chan> <tbeg> <tdur> <ortho> <stype> <name>
    <conf> <slat>. Lines starting with ';;' or '#' are comments.
    """
    turns = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";;") or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if fields[0].upper() != "SPEAKER":
            raise SpanParseError(f"line {lineno}: expected SPEAKER record, got {fields[0]!r}")
        if len(fields) < 9:
            raise SpanParseError(f"line {lineno}: expected >= 9 fields, got {len(fields)}")
        try:
            tbeg = float(fields[3])
            tdur = float(fields[4])
        except ValueError as exc:
            raise SpanParseError(f"line {lineno}: {exc}") from exc
        if tdur <= 0:
            raise NegativeDuration(f"line {lineno}: non-positive duration {tdur}")
        if tbeg < 0:
            raise SpanParseError(f"line {lineno}: negative start {tbeg}")
        turns.append(SpeakerTurn(start_s=tbeg, end_s=tbeg + tdur, speaker_id=fields[7]))
    turns.sort(key=lambda t: (t.start_s, t.end_s, t.speaker_id))
    return turns


# -- Fusion ---------------------------------------------------------------------

def _dominant_speaker(start: float, end: float, turns: Sequence[SpeakerTurn]) -> str:
    """Speaker with maximal overlap of [start, end]; ties go to the earlier turn."""
    overlap: dict[str, float] = {}
    earliest: dict[str, float] = {}
    for turn in turns:
        o = min(end, turn.end_s) - max(start, turn.start_s)
        if o <= 0:
            continue
        overlap[turn.speaker_id] = overlap.get(turn.speaker_id, 0.0) + o
        earliest.setdefault(turn.speaker_id, turn.start_s)
    if not overlap:
        return UNKNOWN_SPEAKER
    return min(overlap, key=lambda s: (-overlap[s], earliest[s], s))


def fuse(
    spans: Sequence[SpeechSpan],
    turns: Sequence[SpeakerTurn],
    *,
    episode_id: str,
    max_segment_s: float = 90.0,
    merge_gap_s: float = 1.0,
) -> list[Segment]:
    """Fuse speech spans with speaker turns into capped, linked segments.

    Rules, in order: cut each span at every turn boundary strictly inside it;
    label each piece with the dominant speaker (UNK when none overlaps); merge
    consecutive same-speaker pieces whose gap is under merge_gap_s while the
    merged length stays within max_segment_s; split anything still over the
    cap greedily left to right; then assign ids and neighbor links by start
    time.
    """
    if max_segment_s <= 0:
        raise ValueError("max_segment_s must be positive")
    ordered = list(spans)
    if ordered != sorted(ordered, key=lambda s: s.start_s):
        raise InvariantViolation("spans must be sorted by start time")
    validate_spans(ordered)
    turn_list = list(turns)
    if turn_list != sorted(turn_list, key=lambda t: t.start_s):
        raise InvariantViolation("turns must be sorted by start time")
    for t in turn_list:
        if t.start_s >= t.end_s:
            raise InvariantViolation(f"turn [{t.start_s}, {t.end_s}] is empty or reversed")

    boundaries = sorted({b for t in turn_list for b in (t.start_s, t.end_s)})

    pieces: list[tuple[float, float, str]] = []
    for span in ordered:
        cuts = [span.start_s]
        for b in boundaries:
            # collapse float-noise boundaries; sub-nanosecond pieces are not real
            if b > cuts[-1] + _CUT_EPS and b < span.end_s - _CUT_EPS:
                cuts.append(b)
        cuts.append(span.end_s)
        for a, b in zip(cuts, cuts[1:]):
            pieces.append((a, b, _dominant_speaker(a, b, turn_list)))

    merged: list[list] = []
    for start, end, speaker in pieces:
        if (merged
                and merged[-1][2] == speaker
                and start - merged[-1][1] < merge_gap_s
                and end - merged[-1][0] <= max_segment_s):
            merged[-1][1] = end
        else:
            merged.append([start, end, speaker])

    final: list[tuple[float, float, str]] = []
    for start, end, speaker in merged:
        while end - start > max_segment_s:
            final.append((start, start + max_segment_s, speaker))
            start += max_segment_s
        if end > start:
            final.append((start, end, speaker))

    segments = [
        Segment(
            segment_id=f"{episode_id}_seg{i}",
            episode_id=episode_id,
            start_s=start,
            end_s=end,
            speaker_id=speaker,
        )
        for i, (start, end, speaker) in enumerate(final)
    ]
    link_neighbors(segments)
    return segments


def link_neighbors(segments: list[Segment]) -> None:
    """Set symmetric prev/next ids following list order."""
    for i, seg in enumerate(segments):
        seg.prev_id = segments[i - 1].segment_id if i > 0 else None
        seg.next_id = segments[i + 1].segment_id if i + 1 < len(segments) else None


def slice_audio(buf: AudioBuffer, seg: Segment) -> AudioBuffer:
    """Extract a segment's samples from the episode buffer."""
    return slice_buffer(buf, seg.start_s, seg.end_s)
