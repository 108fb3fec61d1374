"""Exact flat inner-product index over L2-normalized embeddings.

Search scores every row and sorts, so results are exact; ties break by
insertion order. For normalized vectors the inner product is the cosine
similarity, so scores are kept as raw inner products.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import NORM_TOLERANCE, Embedding
from .errors import CorruptStore, DimensionMismatch, DuplicateId, NotNormalized

MAGIC = b"VOXIDX1"


@dataclass(frozen=True)
class SearchHit:
    segment_id: str
    score: float
    rank: int  # 1-based


class Index:
    """Immutable after build; concurrent searches are safe."""

    def __init__(self, ids: list[str], matrix: np.ndarray, dim: int):
        self.ids = ids
        self.matrix = matrix  # float32, shape (N, dim)
        self.dim = dim
        self._matrix64 = matrix.astype(np.float64)

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def build(cls, entries: Sequence[tuple[str, Embedding]], dim: int | None = None) -> "Index":
        """Build from (segment_id, normalized embedding) pairs, order-preserving."""
        if dim is None:
            dim = entries[0][1].dim if entries else 0
        ids: list[str] = []
        seen = set()
        rows = np.zeros((len(entries), dim), dtype=np.float32)
        for i, (segment_id, emb) in enumerate(entries):
            if segment_id in seen:
                raise DuplicateId(f"segment id {segment_id!r} supplied twice")
            seen.add(segment_id)
            if emb.dim != dim or len(emb.values) != dim:
                raise DimensionMismatch(f"embedding for {segment_id!r} has dim {emb.dim}, expected {dim}")
            _require_normalized(emb, segment_id)
            ids.append(segment_id)
            rows[i] = emb.values
        return cls(ids=ids, matrix=rows, dim=dim)

    def search(self, query: Embedding, k: int) -> list[SearchHit]:
        """Exact top-min(k, N) hits by inner product, descending."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if query.dim != self.dim or len(query.values) != self.dim:
            raise DimensionMismatch(f"query dim {query.dim}, index dim {self.dim}")
        _require_normalized(query, "<query>")
        if not self.ids:
            return []
        scores = self._matrix64 @ query.values.astype(np.float64)
        order = np.lexsort((np.arange(len(scores)), -scores))[:k]
        return [SearchHit(segment_id=self.ids[i], score=float(scores[i]), rank=r + 1)
                for r, i in enumerate(order)]

    # -- persistence: magic + dim + count + id table + row-major f32 LE matrix --

    def save(self, path: str | Path) -> None:
        path = Path(path)
        blob = bytearray()
        blob += MAGIC
        blob += struct.pack("<II", self.dim, len(self.ids))
        for segment_id in self.ids:
            encoded = segment_id.encode("utf-8")
            blob += struct.pack("<I", len(encoded)) + encoded
        blob += np.ascontiguousarray(self.matrix, dtype="<f4").tobytes()
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(bytes(blob))
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "Index":
        data = Path(path).read_bytes()
        if len(data) < len(MAGIC) + 8 or data[:len(MAGIC)] != MAGIC:
            raise CorruptStore(f"{path}: bad index magic")
        pos = len(MAGIC)
        dim, count = struct.unpack_from("<II", data, pos)
        pos += 8
        ids = []
        for _ in range(count):
            if pos + 4 > len(data):
                raise CorruptStore(f"{path}: truncated id table")
            (length,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if pos + length > len(data):
                raise CorruptStore(f"{path}: truncated id table")
            ids.append(data[pos:pos + length].decode("utf-8"))
            pos += length
        expected = count * dim * 4
        if len(data) - pos != expected:
            raise CorruptStore(f"{path}: matrix size {len(data) - pos}, expected {expected}")
        matrix = np.frombuffer(data[pos:], dtype="<f4").reshape(count, dim).copy()
        return cls(ids=ids, matrix=matrix, dim=dim)


def _require_normalized(emb: Embedding, label: str) -> None:
    if not emb.normalized:
        raise NotNormalized(f"embedding {label!r} was not normalized")
    norm = float(np.linalg.norm(emb.values.astype(np.float64)))
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise NotNormalized(f"embedding {label!r} has norm {norm}")
