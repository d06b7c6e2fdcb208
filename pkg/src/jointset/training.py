"""Minibatch training loop with validation-based epoch selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import network
from .data import Dataset, cardinality_stats
from .loss import TrainConfig, batch_objective, data_loss_and_grad, objective_and_grad
from .network import Architecture, ModelParams
from .rng import stream
from .set_model import CardinalityStats

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_objective: float
    val_objective: float


@dataclass
class TrainResult:
    params: ModelParams
    selected_epoch: int
    history: list = field(default_factory=list)

    @property
    def selected(self) -> EpochRecord:
        return self.history[self.selected_epoch]

    def history_csv(self) -> str:
        rows = ["epoch,lr,train_objective,val_objective"]
        rows += [f"{r.epoch},{r.lr!r},{r.train_objective!r},{r.val_objective!r}" for r in self.history]
        return "\n".join(rows) + "\n"


def train(arch: Architecture, cfg: TrainConfig, train_set: Dataset, val_set: Dataset,
          stats: CardinalityStats | None = None, init_params: ModelParams | None = None) -> TrainResult:
    """Momentum SGD on the mean per-sample loss with weight decay ``2 * gamma``.

    The ``2 * gamma`` factor makes each step follow the exact gradient of
    ``batch_objective``. After every epoch both objectives are evaluated in
    eval mode; the parameters of the epoch with the lowest validation
    objective are returned (earliest on ties).
    """
    if stats is None:
        stats = cardinality_stats(train_set)
    params = network.init(arch, cfg.seed) if init_params is None else init_params.copy()
    state = network.init_optimizer(params, cfg.base_lr)
    X, Z = train_set.features, train_set.indicators()
    n = len(train_set)

    history, best = [], None
    for epoch in range(cfg.epochs):
        lr = network.lr_schedule(epoch, cfg.base_lr, cfg.lr_decay)
        order = stream(cfg.seed, "shuffle", epoch).permutation(n)
        drop_rng = stream(cfg.seed, "dropout", epoch)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, grads = data_loss_and_grad(params, X[idx], Z[idx], stats, cfg, mode="train",
                                          rng=drop_rng, dropout=arch.dropout)
            params, state = network.sgd_step(params, grads, state, lr=lr, momentum=cfg.momentum,
                                             weight_decay=2.0 * cfg.gamma)
        state.epoch = epoch + 1
        tr = batch_objective(params, train_set, stats, cfg)
        va = batch_objective(params, val_set, stats, cfg)
        if not (np.isfinite(tr) and np.isfinite(va) and params.is_finite()):
            raise TrainingDiverged(f"non-finite objective at epoch {epoch} (train={tr}, val={va})")
        history.append(EpochRecord(epoch, lr, tr, va))
        log.info("epoch %d lr %.3g train %.5f val %.5f", epoch, lr, tr, va)
        if best is None or va < best[0]:
            best = (va, epoch, params.copy())
    return TrainResult(best[2], best[1], history)


def gradient_descent(params: ModelParams, X, Z, stats: CardinalityStats, cfg: TrainConfig,
                     lr: float, iterations: int):
    """Plain full-batch descent on ``batch_objective`` (no dropout, no momentum).

    Returns the final parameters and the objective before each step plus the
    final one.
    """
    trace = []
    for _ in range(iterations):
        value, grads = objective_and_grad(params, X, Z, stats, cfg)
        if not np.isfinite(value):
            raise TrainingDiverged("non-finite objective during gradient descent")
        trace.append(value)
        params = ModelParams([w - lr * g for w, g in zip(params.weights, grads.weights)],
                             [b - lr * g for b, g in zip(params.biases, grads.biases)])
    trace.append(objective_and_grad(params, X, Z, stats, cfg)[0])
    return params, trace
