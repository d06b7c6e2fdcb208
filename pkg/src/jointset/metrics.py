"""Multi-label evaluation: per-class, overall and per-instance precision/recall/F1.

Empty-denominator conventions (fixed so fixtures are exact):

* per class: classes with neither predictions nor ground truth are skipped;
  precision is 0 for a class with ground truth but no predictions; recall is
  averaged only over classes that occur in the ground truth.
* per instance: empty prediction with empty ground truth scores P = R = 1;
  empty prediction otherwise scores P = 0; empty ground truth scores R = 1.
* overall: 0/0 is 0.

Every F1 is the harmonic mean of the aggregated P and R, 0 when both are 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .inference import topk_set

F1_FAMILIES = ("c_f1", "o_f1", "i_f1")


@dataclass(frozen=True)
class EvalReport:
    c_p: float
    c_r: float
    c_f1: float
    o_p: float
    o_r: float
    o_f1: float
    i_p: float
    i_r: float
    i_f1: float
    cardinality_mae: float
    cardinality_sd: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "\n".join(f"{k} = {v:.6f}" for k, v in self.to_dict().items())


def f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2.0 * p * r / (p + r)


def _members(s) -> set:
    return set(getattr(s, "members", s))


def _check_labels(sets, M):
    for s in sets:
        for i in s:
            if not 0 <= i < M:
                raise ValueError(f"label {i} outside [0, {M})")


def evaluate(predictions, ground_truth, M: int) -> EvalReport:
    preds = [_members(p) for p in predictions]
    gts = [_members(g) for g in ground_truth]
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} predictions for {len(gts)} ground-truth sets")
    if not preds:
        raise ValueError("nothing to evaluate")
    _check_labels(preds, M)
    _check_labels(gts, M)

    tp = np.zeros(M)
    npred = np.zeros(M)
    ngt = np.zeros(M)
    inst_p, inst_r = [], []
    for p, g in zip(preds, gts):
        hit = p & g
        for i in hit:
            tp[i] += 1
        for i in p:
            npred[i] += 1
        for i in g:
            ngt[i] += 1
        if p:
            inst_p.append(len(hit) / len(p))
        else:
            inst_p.append(1.0 if not g else 0.0)
        inst_r.append(len(hit) / len(g) if g else 1.0)

    active = (npred > 0) | (ngt > 0)
    cls_p = np.divide(tp, npred, out=np.zeros(M), where=npred > 0)
    cls_r = np.divide(tp, ngt, out=np.zeros(M), where=ngt > 0)
    c_p = float(cls_p[active].mean()) if active.any() else 0.0
    c_r = float(cls_r[ngt > 0].mean()) if (ngt > 0).any() else 0.0

    total_tp, total_pred, total_gt = tp.sum(), npred.sum(), ngt.sum()
    o_p = float(total_tp / total_pred) if total_pred else 0.0
    o_r = float(total_tp / total_gt) if total_gt else 0.0

    i_p = float(np.mean(inst_p))
    i_r = float(np.mean(inst_r))
    mae, sd = cardinality_error(preds, gts)
    return EvalReport(c_p, c_r, f1(c_p, c_r), o_p, o_r, f1(o_p, o_r), i_p, i_r, f1(i_p, i_r),
                      mae, sd)


def cardinality_error(predictions, ground_truth) -> tuple:
    """Mean and population standard deviation of ``| |pred| - |gt| |``."""
    sizes_p = [len(_members(p)) for p in predictions]
    sizes_g = [len(_members(g)) for g in ground_truth]
    if len(sizes_p) != len(sizes_g):
        raise ValueError("length mismatch")
    if not sizes_p:
        raise ValueError("empty input")
    err = np.abs(np.array(sizes_p) - np.array(sizes_g))
    return float(err.mean()), float(err.std())


def best_k(score_matrix, ground_truth, M: int, target: str = "o_f1"):
    """Scan every fixed set size ``k = 1..M`` and keep the one with the best F1."""
    if target not in F1_FAMILIES:
        raise ValueError(f"target must be one of {F1_FAMILIES}")
    scores = np.atleast_2d(np.asarray(score_matrix, dtype=float))
    if scores.size == 0 or len(ground_truth) == 0:
        raise ValueError("empty input")
    best = None
    for k in range(1, M + 1):
        preds = [topk_set(row, k) for row in scores]
        report = evaluate(preds, ground_truth, M)
        value = getattr(report, target)
        if best is None or value > best[2]:
            best = (k, report, value)
    return best[0], best[1]
