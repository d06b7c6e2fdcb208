"""Set decoders: exact MAP, fixed top-k, and cardinality-first (sequential).

The MAP problem ``max_Z f(1'Z) + c'Z`` splits into a sort of the per-label
scores ``c`` and a sweep over all cardinalities: for each m the best set is the
m highest scores, so only ``f(m) + prefix_sum(m)`` has to be compared.

Ties: equal scores prefer the lower label index; equal sweep objectives prefer
the smaller cardinality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import DualOutput
from .set_model import (
    CardinalityStats,
    LabelSet,
    check_u,
    dc_log_pmf_vector,
    dc_pmf,
    log_sigmoid,
)


@dataclass(frozen=True)
class MapResult:
    labels: LabelSet
    m_star: int
    log_score: float


def label_scores(label_logits, u: float) -> np.ndarray:
    """``c^l = log u + log sigmoid(O^l)``."""
    return np.log(check_u(u)) + log_sigmoid(np.asarray(label_logits, dtype=float))


def _order(scores: np.ndarray) -> np.ndarray:
    # stable sort on the negated scores keeps lower indices first among ties
    return np.argsort(-scores, kind="stable")


def map_from_scores(log_card: np.ndarray, scores: np.ndarray) -> MapResult:
    """Exact argmax of ``log_card[m] + sum of the m largest scores``."""
    scores = np.asarray(scores, dtype=float)
    M = scores.shape[0]
    if log_card.shape[0] != M + 1:
        raise ValueError("cardinality log-pmf must cover 0..M")
    order = _order(scores)
    prefix = np.concatenate([[0.0], np.cumsum(scores[order])])
    objective = log_card + prefix
    m_star = int(np.argmax(objective))  # first maximum -> smallest m
    return MapResult(LabelSet(order[:m_star].tolist(), M), m_star, float(objective[m_star]))


def map_set(out: DualOutput, stats: CardinalityStats, u: float) -> MapResult:
    log_card = dc_log_pmf_vector(out.alpha, stats)
    return map_from_scores(log_card, label_scores(out.label_logits, u))


def topk_set(label_logits, k: int) -> LabelSet:
    logits = np.asarray(label_logits, dtype=float)
    M = logits.shape[0]
    if not 0 <= k <= M:
        raise ValueError(f"k={k} outside [0, {M}]")
    return LabelSet(_order(logits)[:k].tolist(), M)


def sequential_set(out: DualOutput, stats: CardinalityStats) -> LabelSet:
    """Predict the modal cardinality first, then take that many top logits."""
    m_hat = int(np.argmax(dc_pmf(out.alpha, stats)))
    return topk_set(out.label_logits, m_hat)


def decode_batch(out: DualOutput, stats: CardinalityStats, u: float, decoder: str = "jds",
                 k: int | None = None, true_sizes=None) -> list:
    """Decode every row of a batched ``DualOutput``.

    ``decoder`` is ``jds`` (MAP), ``ds`` (sequential), ``topk`` (needs ``k``) or
    ``gtcard`` (top-|ground truth|, needs ``true_sizes``).
    """
    n = np.atleast_2d(out.label_logits).shape[0]
    logits = np.atleast_2d(out.label_logits)
    card = np.atleast_2d(out.card_preacts)
    rows = [DualOutput(logits[i], card[i]) for i in range(n)]
    if decoder == "jds":
        return [map_set(r, stats, u).labels for r in rows]
    if decoder == "ds":
        return [sequential_set(r, stats) for r in rows]
    if decoder == "topk":
        if k is None:
            raise ValueError("topk decoding needs k")
        return [topk_set(r.label_logits, k) for r in rows]
    if decoder == "gtcard":
        return [topk_set(r.label_logits, int(s)) for r, s in zip(rows, true_sizes)]
    raise ValueError(f"unknown decoder {decoder!r}")
