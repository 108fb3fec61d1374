"""Audio loading and preprocessing: WAV decode, mono downmix, resampling, VAD.

Only RIFF/WAVE with PCM16 or float32 samples is decoded; other containers
must be converted upstream. All buffers hold float32 samples in [-1, 1],
interleaved when multichannel.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .errors import CorruptHeader, InvariantViolation, OutOfRange, SpanParseError, UnsupportedCodec

PIPELINE_RATE = 16000

_RESAMPLE_TAPS = 64
_KAISER_BETA = 8.6


@dataclass
class AudioBuffer:
    """Decoded PCM audio. Samples are interleaved float32 in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int
    channel_count: int = 1

    @property
    def duration_s(self) -> float:
        return len(self.samples) / (self.sample_rate * self.channel_count)


@dataclass(frozen=True)
class SpeechSpan:
    start_s: float
    end_s: float


@dataclass(frozen=True)
class VadConfig:
    frame_ms: int = 30
    threshold_db: float = -40.0
    min_silence_ms: int = 300
    min_speech_ms: int = 250


# -- WAV I/O ------------------------------------------------------------------

def load_audio(path: str | Path) -> AudioBuffer:
    """Decode a RIFF/WAVE file (PCM16 or float32) at its original rate.

    Raises FileNotFoundError, CorruptHeader, or UnsupportedCodec.
    """
    data = Path(path).read_bytes()
    return decode_wav(data)


def decode_wav(data: bytes) -> AudioBuffer:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeader("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    raw = None
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        size = struct.unpack_from("<I", data, pos + 4)[0]
        body = data[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader("fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < size:
                raise CorruptHeader("data chunk truncated")
            raw = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None or raw is None:
        raise CorruptHeader("missing fmt or data chunk")
    audio_format, channels, rate, _, _, bits = fmt
    if channels < 1 or rate <= 0:
        raise CorruptHeader("invalid channel count or sample rate")
    if audio_format == 1 and bits == 16:
        ints = np.frombuffer(raw[:len(raw) - len(raw) % 2], dtype="<i2")
        samples = (ints.astype(np.float32) / 32768.0)
    elif audio_format == 3 and bits == 32:
        floats = np.frombuffer(raw[:len(raw) - len(raw) % 4], dtype="<f4")
        samples = np.clip(floats, -1.0, 1.0).astype(np.float32)
    else:
        raise UnsupportedCodec(f"unsupported WAV format {audio_format} / {bits} bits")
    samples = samples[:len(samples) - len(samples) % channels]
    return AudioBuffer(samples=samples, sample_rate=int(rate), channel_count=int(channels))


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Round-trip samples through the stored PCM16 representation.

    Goes through int16 so the result is byte-identical to decoding an
    encoded file (no negative zeros).
    """
    ints = np.clip(np.rint(np.asarray(samples, dtype=np.float64) * 32768.0), -32768, 32767)
    return ints.astype("<i2").astype(np.float32) / 32768.0


def encode_wav(buf: AudioBuffer) -> bytes:
    """Serialize a buffer as PCM16 WAV bytes."""
    ints = np.clip(np.rint(buf.samples.astype(np.float64) * 32768.0), -32768, 32767).astype("<i2")
    raw = ints.tobytes()
    channels = buf.channel_count
    byte_rate = buf.sample_rate * channels * 2
    header = b"RIFF" + struct.pack("<I", 36 + len(raw)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, channels, buf.sample_rate, byte_rate, channels * 2, 16)
    header += b"data" + struct.pack("<I", len(raw))
    return header + raw


def save_wav(path: str | Path | BinaryIO, buf: AudioBuffer) -> None:
    data = encode_wav(buf)
    if hasattr(path, "write"):
        path.write(data)
    else:
        Path(path).write_bytes(data)


# -- Preprocessing ------------------------------------------------------------

def to_mono(buf: AudioBuffer) -> AudioBuffer:
    """Downmix to one channel by arithmetic mean, clamped to [-1, 1]."""
    if buf.channel_count < 1:
        raise InvariantViolation("channel_count must be >= 1")
    if buf.channel_count == 1:
        return buf
    frames = buf.samples.reshape(-1, buf.channel_count)
    mixed = np.clip(frames.mean(axis=1), -1.0, 1.0).astype(np.float32)
    return AudioBuffer(samples=mixed, sample_rate=buf.sample_rate, channel_count=1)


def _kaiser(u: np.ndarray) -> np.ndarray:
    # u in [-1, 1], window support normalized to the half-width
    safe = np.clip(1.0 - u * u, 0.0, None)
    return np.i0(_KAISER_BETA * np.sqrt(safe)) / np.i0(_KAISER_BETA)


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited resampling with a 64-tap Kaiser-windowed sinc kernel.

    Same-rate input is returned unchanged, bit for bit.
    """
    if buf.channel_count != 1:
        raise InvariantViolation("resample expects a mono buffer")
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == buf.sample_rate:
        return buf
    src = buf.samples.astype(np.float64)
    n_in = len(src)
    n_out = int(round(n_in * target_rate / buf.sample_rate))
    if n_in == 0 or n_out == 0:
        return AudioBuffer(np.zeros(0, dtype=np.float32), target_rate, 1)
    half = _RESAMPLE_TAPS // 2
    rho = min(1.0, target_rate / buf.sample_rate)  # cutoff vs source Nyquist
    step = buf.sample_rate / target_rate
    padded = np.concatenate([np.zeros(half), src, np.zeros(half + 1)])
    out = np.empty(n_out, dtype=np.float64)
    offsets = np.arange(_RESAMPLE_TAPS)
    chunk = 65536
    for start in range(0, n_out, chunk):
        m = np.arange(start, min(start + chunk, n_out))
        t = m * step
        k0 = np.floor(t).astype(np.int64) - (half - 1)
        u = (k0[:, None] + offsets[None, :]) - t[:, None]
        w = rho * np.sinc(rho * u) * _kaiser(u / half)
        w /= w.sum(axis=1, keepdims=True)
        gathered = padded[k0[:, None] + offsets[None, :] + half]
        out[m] = (w * gathered).sum(axis=1)
    clipped = np.clip(out, -1.0, 1.0).astype(np.float32)
    return AudioBuffer(samples=clipped, sample_rate=int(target_rate), channel_count=1)


def slice_buffer(buf: AudioBuffer, start_s: float, end_s: float) -> AudioBuffer:
    """Extract [start_s, end_s) by sample-rounded indices."""
    if buf.channel_count != 1:
        raise InvariantViolation("slice expects a mono buffer")
    if start_s < 0 or end_s < start_s:
        raise OutOfRange(f"bad slice [{start_s}, {end_s}]")
    i = int(round(start_s * buf.sample_rate))
    j = int(round(end_s * buf.sample_rate))
    if j > len(buf.samples):
        raise OutOfRange(f"slice end {end_s}s beyond buffer ({buf.duration_s}s)")
    return AudioBuffer(samples=buf.samples[i:j], sample_rate=buf.sample_rate, channel_count=1)


# -- Voice activity detection ---------------------------------------------------

def frame_rms_db(buf: AudioBuffer, frame_len: int) -> np.ndarray:
    """Per-frame RMS energy in dBFS; the final partial frame uses its true length."""
    x = buf.samples.astype(np.float64)
    n_frames = math.ceil(len(x) / frame_len)
    sq = x * x
    edges = np.arange(0, n_frames * frame_len, frame_len)
    sums = np.add.reduceat(sq, edges) if len(x) else np.zeros(0)
    counts = np.minimum(edges + frame_len, len(x)) - edges
    rms = np.sqrt(sums / np.maximum(counts, 1))
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(rms)


def detect_speech(buf: AudioBuffer, cfg: VadConfig = VadConfig()) -> list[SpeechSpan]:
    """Energy VAD: frames above threshold, silence-gap merging, minimum length.

    Returns sorted, non-overlapping spans inside [0, duration].
    """
    if buf.channel_count != 1:
        raise InvariantViolation("detect_speech expects a mono buffer")
    if len(buf.samples) == 0:
        return []
    frame_len = max(1, int(round(buf.sample_rate * cfg.frame_ms / 1000)))
    db = frame_rms_db(buf, frame_len)
    speech = db > cfg.threshold_db
    frame_s = frame_len / buf.sample_rate
    duration = buf.duration_s

    spans: list[list[float]] = []
    run_start = None
    for i, flag in enumerate(speech):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            spans.append([run_start * frame_s, i * frame_s])
            run_start = None
    if run_start is not None:
        spans.append([run_start * frame_s, min(duration, len(speech) * frame_s)])

    merged: list[list[float]] = []
    min_gap = cfg.min_silence_ms / 1000
    for span in spans:
        if merged and span[0] - merged[-1][1] < min_gap:
            merged[-1][1] = span[1]
        else:
            merged.append(span)

    min_len = cfg.min_speech_ms / 1000
    return [SpeechSpan(s, e) for s, e in merged if e - s >= min_len]


# -- External span import --------------------------------------------------------

def import_spans(path: str | Path) -> list[SpeechSpan]:
    """Parse a span-list file: one "<start_s> <end_s>" pair per line, '#' comments.

    Output is sorted by start; overlapping or reversed spans raise
    InvariantViolation, malformed lines raise SpanParseError.
    """
    text = Path(path).read_text(encoding="utf-8")
    spans = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 2:
            raise SpanParseError(f"line {lineno}: expected two fields, got {len(fields)}")
        try:
            start, end = float(fields[0]), float(fields[1])
        except ValueError as exc:
            raise SpanParseError(f"line {lineno}: {exc}") from exc
        if not (0 <= start < end):
            raise InvariantViolation(f"line {lineno}: reversed or negative span [{start}, {end}]")
        spans.append(SpeechSpan(start, end))
    spans.sort(key=lambda s: (s.start_s, s.end_s))
    validate_spans(spans)
    return spans


def validate_spans(spans: Sequence[SpeechSpan]) -> None:
    """Check the span-list invariant: sorted, pairwise non-overlapping."""
    for prev, cur in zip(spans, spans[1:]):
        if cur.start_s < prev.end_s:
            raise InvariantViolation(
                f"spans overlap: [{prev.start_s}, {prev.end_s}] and [{cur.start_s}, {cur.end_s}]"
            )
