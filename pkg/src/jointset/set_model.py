"""Dirichlet-Categorical cardinality model and the set log-density.

The cardinality of a label set is modelled by a categorical distribution whose
event probabilities are integrated out against a Dirichlet prior with
per-sample concentrations ``alpha``, shifted by the training-set histogram of
cardinalities. The resulting marginal is a simple ratio, so everything here is
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class InvariantError(ValueError):
    """Raised when a value violates a domain invariant."""


@dataclass(frozen=True)
class LabelSet:
    """Unordered collection of distinct label indices in ``{0, ..., M-1}``."""

    members: frozenset
    num_labels: int

    def __init__(self, members: Iterable[int], num_labels: int):
        items = [int(i) for i in members]
        if len(set(items)) != len(items):
            raise InvariantError(f"duplicate labels in {sorted(items)}")
        for i in items:
            if i < 0 or i >= num_labels:
                raise InvariantError(f"label {i} outside [0, {num_labels})")
        object.__setattr__(self, "members", frozenset(items))
        object.__setattr__(self, "num_labels", int(num_labels))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def __contains__(self, item) -> bool:
        return item in self.members

    def sorted(self) -> list[int]:
        return sorted(self.members)

    def indicator(self) -> np.ndarray:
        z = np.zeros(self.num_labels)
        z[list(self.members)] = 1.0
        return z


@dataclass(frozen=True)
class CardinalityStats:
    """Histogram of training-set cardinalities, ``counts[m]`` for m = 0..M."""

    counts: tuple
    total: int

    def __init__(self, counts: Sequence[int], total: int | None = None):
        counts = tuple(int(c) for c in counts)
        if any(c < 0 for c in counts):
            raise InvariantError("cardinality counts must be non-negative")
        if total is None:
            total = sum(counts)
        if int(total) != sum(counts):
            raise InvariantError(f"total {total} != sum of counts {sum(counts)}")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(total))

    @property
    def max_cardinality(self) -> int:
        return len(self.counts) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)

    @classmethod
    def uniform(cls, num_labels: int, per_bin: int = 0) -> "CardinalityStats":
        return cls([per_bin] * (num_labels + 1))


def check_alpha(alpha, stats: CardinalityStats | None = None) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1:
        raise InvariantError("alpha must be a vector")
    if not np.all(np.isfinite(alpha)):
        raise InvariantError("alpha must be finite")
    if np.any(alpha <= 0):
        raise InvariantError("alpha entries must be strictly positive")
    if stats is not None and len(stats.counts) != alpha.shape[0]:
        raise InvariantError(
            f"alpha has {alpha.shape[0]} entries but stats cover {len(stats.counts)} cardinalities"
        )
    return alpha


def check_u(u: float) -> float:
    u = float(u)
    if not np.isfinite(u) or u <= 0:
        raise InvariantError(f"hyper-volume unit must be positive and finite, got {u}")
    return u


def _check_m(m: int, size: int) -> int:
    if not 0 <= m < size:
        raise IndexError(f"cardinality {m} outside [0, {size - 1}]")
    return int(m)


def dc_pmf(alpha, stats: CardinalityStats) -> np.ndarray:
    """Dirichlet-Categorical pmf ``(alpha_m + C_m) / (sum(alpha) + C)`` over m = 0..M."""
    alpha = check_alpha(alpha, stats)
    shifted = alpha + stats.as_array()
    return shifted / (alpha.sum() + stats.total)


def dc_log_pmf(m: int, alpha, stats: CardinalityStats) -> float:
    alpha = check_alpha(alpha, stats)
    m = _check_m(m, alpha.shape[0])
    return float(np.log(alpha[m] + stats.counts[m]) - np.log(alpha.sum() + stats.total))


def dc_log_pmf_vector(alpha, stats: CardinalityStats) -> np.ndarray:
    alpha = check_alpha(alpha, stats)
    return np.log(alpha + stats.as_array()) - np.log(alpha.sum() + stats.total)


def dc_grad_alpha(m: int, alpha, stats: CardinalityStats) -> np.ndarray:
    """Gradient of ``log DC(m; alpha)`` with respect to every ``alpha_j``."""
    alpha = check_alpha(alpha, stats)
    m = _check_m(m, alpha.shape[0])
    grad = np.full(alpha.shape, -1.0 / (alpha.sum() + stats.total))
    grad[m] += 1.0 / (alpha[m] + stats.counts[m])
    return grad


def log_sigmoid(x):
    """Stable ``log(1 / (1 + exp(-x)))``."""
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(-np.abs(x))))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def set_log_density(labels, label_logits, alpha, stats: CardinalityStats, u: float) -> float:
    """Unnormalised log-score of a label set.

    ``log DC(m) + m log u + sum_{l in labels} log sigmoid(O^l)``. Used both as
    the per-sample inference objective and as the quantity brute force maximises.
    """
    label_logits = np.asarray(label_logits, dtype=float)
    alpha = check_alpha(alpha, stats)
    u = check_u(u)
    num_labels = label_logits.shape[0]
    if alpha.shape[0] != num_labels + 1:
        raise InvariantError(
            f"alpha length {alpha.shape[0]} inconsistent with {num_labels} label logits"
        )
    if isinstance(labels, LabelSet):
        if labels.num_labels != num_labels:
            raise InvariantError("label set universe does not match logits")
        idx = labels.sorted()
    else:
        idx = LabelSet(labels, num_labels).sorted()
    m = len(idx)
    score = dc_log_pmf(m, alpha, stats) + m * np.log(u)
    if m:
        score += float(np.sum(log_sigmoid(label_logits[idx])))
    return float(score)
