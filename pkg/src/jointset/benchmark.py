"""Desk-scale comparison of joint, sequential and fixed-k set prediction.

Three networks are trained on the same split:

* ``joint``: one network, BCE + Dirichlet-Categorical loss (decoded by exact MAP);
* ``bce``: classifier trained with BCE only (decoded with the best fixed k);
* ``card``: initialised from ``bce`` and fine-tuned on the cardinality loss
  only; its modal cardinality picks how many of the ``bce`` top labels to keep.

Rows decoded with the ground-truth cardinality give the upper bound for each
classifier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import inference, network
from .data import Dataset, cardinality_stats
from .loss import TrainConfig
from .metrics import EvalReport, best_k, evaluate
from .network import Architecture, DualOutput
from .training import train

U_GRID = tuple(np.round(np.exp(np.linspace(np.log(0.5), np.log(20.0), 41)), 4))


def tune_u(out: DualOutput, labels, stats, M: int, grid=U_GRID, target: str = "o_f1") -> float:
    """Hyper-volume unit maximising an F1 family of MAP decoding on held-out data."""
    best = None
    for u in grid:
        value = getattr(evaluate(inference.decode_batch(out, stats, float(u), "jds"), labels, M), target)
        if best is None or value > best[1]:
            best = (float(u), value)
    return best[0]


@dataclass
class BenchmarkResult:
    rows: dict  # name -> EvalReport
    notes: dict = field(default_factory=dict)

    def criteria(self) -> dict:
        r = self.rows
        jds, ds, topk = r["JDS"], r["DS"], r["BCE topk:best"]
        upper = r["JDS GT-cardinality"]
        dominates = all(
            getattr(upper, f) >= getattr(row, f) for row in (jds, ds) for f in ("c_f1", "o_f1", "i_f1")
        )
        return {
            "jds_of1_vs_topk": jds.o_f1 >= topk.o_f1 - 0.01,
            "jds_mae_vs_modal": jds.cardinality_mae <= r["BCE topk:modal"].cardinality_mae,
            "gt_cardinality_dominates": dominates,
        }

    def to_dict(self) -> dict:
        return {
            "rows": {k: v.to_dict() for k, v in self.rows.items()},
            "notes": self.notes,
            "criteria": self.criteria(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_text(self) -> str:
        cols = ("c_p", "c_r", "c_f1", "o_p", "o_r", "o_f1", "i_p", "i_r", "i_f1", "cardinality_mae")
        head = f"{'method':<22}" + "".join(f"{c.upper().replace('_', '-'):>9}" for c in cols[:-1]) + "      MAE"
        lines = [head, "-" * len(head)]
        for name, rep in self.rows.items():
            lines.append(f"{name:<22}" + "".join(f"{100 * getattr(rep, c):9.1f}" for c in cols[:-1])
                         + f"  {rep.cardinality_mae:.2f}±{rep.cardinality_sd:.2f}")
        lines.append("")
        lines += [f"{k}: {v}" for k, v in self.notes.items()]
        lines += [f"criterion {k}: {'PASS' if v else 'FAIL'}" for k, v in self.criteria().items()]
        return "\n".join(lines) + "\n"


def run(train_set: Dataset, val_set: Dataset, test_set: Dataset, cfg: TrainConfig | None = None,
        hidden=(64, 64), dropout: float = 0.5, u: float | None = None) -> BenchmarkResult:
    """Train the three networks and evaluate every decoder on ``test_set``.

    ``u=None`` tunes the hyper-volume unit on ``val_set``.
    """
    cfg = cfg or TrainConfig()
    M = train_set.num_labels
    arch = Architecture(train_set.input_dim, M, tuple(hidden), dropout)
    stats = cardinality_stats(train_set)

    joint = train(arch, replace(cfg, terms="joint"), train_set, val_set, stats)
    bce = train(arch, replace(cfg, terms="bce"), train_set, val_set, stats)
    card = train(arch, replace(cfg, terms="cardinality"), train_set, val_set, stats,
                 init_params=bce.params)

    def outputs(params, ds):
        return network.forward(params, ds.features)[0]

    if u is None:
        u = tune_u(outputs(joint.params, val_set), val_set.labels, stats, M)
    o_joint = outputs(joint.params, test_set)
    o_bce = outputs(bce.params, test_set)
    o_card = outputs(card.params, test_set)
    gt = test_set.labels
    sizes = test_set.sizes()

    rows: dict[str, EvalReport] = {}
    k_star, rows["BCE topk:best"] = best_k(o_bce.label_logits, gt, M, "o_f1")
    modal = int(np.argmax(stats.counts))
    rows["BCE topk:modal"] = evaluate(inference.decode_batch(o_bce, stats, u, "topk", k=modal), gt, M)
    ds_out = DualOutput(o_bce.label_logits, o_card.card_preacts)
    rows["DS"] = evaluate(inference.decode_batch(ds_out, stats, u, "ds"), gt, M)
    rows["JDS"] = evaluate(inference.decode_batch(o_joint, stats, u, "jds"), gt, M)
    rows["BCE GT-cardinality"] = evaluate(
        inference.decode_batch(o_bce, stats, u, "gtcard", true_sizes=sizes), gt, M)
    rows["JDS GT-cardinality"] = evaluate(
        inference.decode_batch(o_joint, stats, u, "gtcard", true_sizes=sizes), gt, M)
    notes = {
        "k_star": k_star,
        "modal_cardinality": modal,
        "u": u,
        "selected_epochs": {"joint": joint.selected_epoch, "bce": bce.selected_epoch,
                            "card": card.selected_epoch},
    }
    return BenchmarkResult(rows, notes)
