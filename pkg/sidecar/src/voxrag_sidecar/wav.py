"""Minimal standalone WAV decode for incoming payloads (PCM16 / float32)."""

from __future__ import annotations

import struct

import numpy as np


class BadWav(Exception):
    pass


def decode_wav_mono(data: bytes) -> tuple[np.ndarray, int]:
    """Decode to mono float32 samples in [-1, 1] plus the sample rate."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise BadWav("not a RIFF/WAVE payload")
    pos = 12
    fmt = None
    raw = None
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        size = struct.unpack_from("<I", data, pos + 4)[0]
        body = data[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise BadWav("fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < size:
                raise BadWav("data chunk truncated")
            raw = body
        pos += 8 + size + (size & 1)
    if fmt is None or raw is None:
        raise BadWav("missing fmt or data chunk")
    audio_format, channels, rate, _, _, bits = fmt
    if channels < 1 or rate <= 0:
        raise BadWav("invalid channel count or sample rate")
    if audio_format == 1 and bits == 16:
        samples = np.frombuffer(raw[:len(raw) - len(raw) % 2], dtype="<i2").astype(np.float32) / 32768.0
    elif audio_format == 3 and bits == 32:
        samples = np.clip(np.frombuffer(raw[:len(raw) - len(raw) % 4], dtype="<f4"), -1.0, 1.0)
    else:
        raise BadWav(f"unsupported WAV format {audio_format}/{bits}")
    samples = samples[:len(samples) - len(samples) % channels]
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    return samples.astype(np.float32), int(rate)
