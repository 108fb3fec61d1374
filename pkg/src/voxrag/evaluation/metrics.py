"""Binary-relevance ranking metrics: Recall@k and nDCG@k."""

from __future__ import annotations

import math
from typing import Sequence

from ..errors import InvariantViolation, UndefinedMetric


def recall_at_k(ranked: Sequence[str], relevant: set[str], k: int) -> float:
    """|top-k intersect relevant| / |relevant|. Undefined for an empty relevant set."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise UndefinedMetric("recall is undefined with no relevant items")
    if len(set(ranked)) != len(ranked):
        raise InvariantViolation("ranked list contains duplicates")
    return len(set(ranked[:k]) & relevant) / len(relevant)


def ndcg_at_k(ranked_labels: Sequence[int], total_relevant: int, k: int) -> float:
    """DCG over the top k binary labels, normalized by the ideal placement.

    The ideal puts min(total_relevant, k) ones at the top ranks. Undefined
    when total_relevant is zero.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if any(label not in (0, 1) for label in ranked_labels):
        raise InvariantViolation("labels must be 0 or 1")
    if total_relevant == 0:
        raise UndefinedMetric("nDCG is undefined with no relevant items")
    if total_relevant < sum(ranked_labels):
        raise InvariantViolation("total_relevant is less than the number of 1-labels")
    dcg = sum(label / math.log2(i + 2) for i, label in enumerate(ranked_labels[:k]))
    idcg = sum(1.0 / math.log2(i + 2) for i in range(min(total_relevant, k)))
    return dcg / idcg
