"""Brute-force and numerical oracles.

Nothing here imports the fast paths (``set_model``, ``network``, ``inference``):
the link function, the Dirichlet-Categorical ratio, the log-sigmoid and the
tie-breaking rule are re-written from their definitions in plain Python so
agreement tests check the definitions, not shared code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ENUM_LABELS = 20
TIE_TOL = 1e-12


class OracleRefusal(ValueError):
    pass


@dataclass(frozen=True)
class BruteForceResult:
    labels: frozenset
    m_star: int
    log_score: float


def _softplus(a: float) -> float:
    if a > 30:
        return a + math.log1p(math.exp(-a))
    return math.log1p(math.exp(a))


def _log_sig(o: float) -> float:
    # log(exp(o) / (1 + exp(o)))
    if o >= 0:
        return -math.log1p(math.exp(-o))
    return o - math.log1p(math.exp(o))


def _unpack(out, stats):
    logits = [float(v) for v in np.asarray(out.label_logits).ravel()]
    alpha = [_softplus(float(a)) + 1e-6 for a in np.asarray(out.card_preacts).ravel()]
    counts = [int(c) for c in stats.counts]
    M = len(logits)
    if M > MAX_ENUM_LABELS:
        raise OracleRefusal(f"refusing to enumerate 2^{M} subsets (limit M <= {MAX_ENUM_LABELS})")
    if len(alpha) != M + 1 or len(counts) != M + 1:
        raise ValueError("inconsistent dimensions")
    return logits, alpha, counts


def subset_score(mask: int, logits, alpha, counts, u: float) -> float:
    members = [i for i in range(len(logits)) if mask >> i & 1]
    m = len(members)
    dc = (alpha[m] + counts[m]) / (sum(alpha) + sum(counts))
    return math.log(dc) + m * math.log(u) + sum(_log_sig(logits[i]) for i in members)


def _bit_table(M: int) -> np.ndarray:
    masks = np.arange(1 << M)
    return ((masks[:, None] >> np.arange(M)) & 1).astype(float)


def _all_scores(logits, alpha, counts, u: float) -> np.ndarray:
    bits = _bit_table(len(logits))
    sizes = bits.sum(axis=1).astype(int)
    log_dc = np.array([math.log((a + c) / (sum(alpha) + sum(counts))) for a, c in zip(alpha, counts)])
    log_sig = np.array([_log_sig(o) for o in logits])
    return log_dc[sizes] + sizes * math.log(u) + bits @ log_sig


def brute_force_map(out, stats, u: float) -> BruteForceResult:
    """Maximise the set log-density over all ``2^M`` subsets.

    Subsets are bitmasks in binary counting order. Scores within 1e-12 of the
    maximum count as tied; ties go to the smaller set, then to the
    lexicographically smallest sorted index list.
    """
    logits, alpha, counts = _unpack(out, stats)
    M = len(logits)
    scores = _all_scores(logits, alpha, counts, u)
    top = float(scores.max())
    best = None
    for mask in np.flatnonzero(scores >= top - TIE_TOL):
        members = tuple(i for i in range(M) if int(mask) >> i & 1)
        key = (len(members), members)
        if best is None or key < best[1]:
            best = (float(scores[mask]), key)
    score, (m, members) = best
    return BruteForceResult(frozenset(members), m, score)


def all_subset_scores(out, stats, u: float) -> list:
    logits, alpha, counts = _unpack(out, stats)
    return _all_scores(logits, alpha, counts, u).tolist()


def enumerate_set_mass(out, stats, u: float) -> float:
    """Total unnormalised mass ``sum_Z exp(score(Z))`` over every subset."""
    return math.fsum(math.exp(s) for s in all_subset_scores(out, stats, u))


def finite_diff_grad(f, point, step: float = 1e-5) -> np.ndarray:
    """Central differences ``(f(x + h e_j) - f(x - h e_j)) / 2h`` per coordinate."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.array(point, dtype=float)
    shape = x.shape
    x = x.ravel()
    grad = np.empty_like(x)
    for j in range(x.size):
        orig = x[j]
        x[j] = orig + step
        fp = f(x.reshape(shape))
        x[j] = orig - step
        fm = f(x.reshape(shape))
        x[j] = orig
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise FloatingPointError(f"non-finite probe at coordinate {j}")
        grad[j] = (fp - fm) / (2.0 * step)
    return grad.reshape(shape)
