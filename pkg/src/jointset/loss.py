"""Joint training objective: binary cross-entropy plus Dirichlet-Categorical NLL.

Per sample the loss is ``BCE(O, z) - log DC(|z|; alpha(a))``; a batch objective
is the mean over samples plus ``gamma * ||W||^2`` over weight matrices. The
``m log U`` term of the set density is constant for a fixed label set and is
not part of the training loss.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import network
from .network import DualOutput, ModelParams
from .set_model import CardinalityStats, LabelSet, log_sigmoid, sigmoid

BCE_MODES = ("full", "positive_only")
# which summands of the per-sample loss are trained: both, or one of them alone
TERMS = {"joint": (1.0, 1.0), "bce": (1.0, 0.0), "cardinality": (0.0, 1.0)}


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 5e-4
    bce_mode: str = "full"
    base_lr: float = 1e-3
    lr_decay: float = 0.95
    momentum: float = 0.9
    epochs: int = 60
    batch_size: int = 32
    seed: int = 0
    terms: str = "joint"

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.bce_mode not in BCE_MODES:
            raise ValueError(f"bce_mode must be one of {BCE_MODES}")
        if self.terms not in TERMS:
            raise ValueError(f"terms must be one of {sorted(TERMS)}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SampleLossBreakdown:
    bce_term: float
    cardinality_term: float

    @property
    def total(self) -> float:
        return self.bce_term + self.cardinality_term


def _as_indicator(labels, num_labels: int) -> np.ndarray:
    if isinstance(labels, LabelSet):
        if labels.num_labels != num_labels:
            raise ValueError("label set universe does not match the output")
        return labels.indicator()
    return LabelSet(labels, num_labels).indicator()


def _check_dims(logits: np.ndarray, card: np.ndarray, stats: CardinalityStats):
    if card.shape[-1] != logits.shape[-1] + 1:
        raise ValueError("card_preacts must have one more entry than label_logits")
    if len(stats.counts) != card.shape[-1]:
        raise ValueError("cardinality stats do not cover 0..M")


def batch_losses(out: DualOutput, Z: np.ndarray, stats: CardinalityStats, cfg: TrainConfig):
    """Per-sample ``(bce, cardinality)`` terms for a batch with indicator matrix ``Z``."""
    O = np.atleast_2d(out.label_logits)
    A = np.atleast_2d(out.card_preacts)
    Z = np.atleast_2d(Z)
    _check_dims(O, A, stats)
    if Z.shape != O.shape:
        raise ValueError("indicator matrix does not match label logits")
    pos = Z * log_sigmoid(O)
    if cfg.bce_mode == "full":
        bce = -np.sum(pos + (1.0 - Z) * log_sigmoid(-O), axis=1)
    else:
        bce = -np.sum(pos, axis=1)
    alpha = network.alpha_link(A)
    counts = stats.as_array()
    m = Z.sum(axis=1).astype(int)
    rows = np.arange(len(m))
    card = np.log(alpha.sum(axis=1) + stats.total) - np.log(alpha[rows, m] + counts[m])
    return bce, card


def batch_loss_grads(out: DualOutput, Z: np.ndarray, stats: CardinalityStats,
                     cfg: TrainConfig) -> DualOutput:
    """Per-sample gradients of ``bce + cardinality`` w.r.t. logits and pre-activations."""
    O = np.atleast_2d(out.label_logits)
    A = np.atleast_2d(out.card_preacts)
    Z = np.atleast_2d(Z)
    _check_dims(O, A, stats)
    if cfg.bce_mode == "full":
        g_logits = sigmoid(O) - Z
    else:
        g_logits = -Z * sigmoid(-O)
    alpha = network.alpha_link(A)
    counts = stats.as_array()
    m = Z.sum(axis=1).astype(int)
    rows = np.arange(len(m))
    # d(-log DC)/d alpha_j = 1/(sum alpha + C) - [j == m]/(alpha_m + C_m)
    g_alpha = np.repeat(1.0 / (alpha.sum(axis=1, keepdims=True) + stats.total), A.shape[1], axis=1)
    g_alpha[rows, m] -= 1.0 / (alpha[rows, m] + counts[m])
    g_card = g_alpha * network.alpha_link_grad(A)
    return DualOutput(g_logits, g_card)


def sample_loss(out: DualOutput, labels, stats: CardinalityStats,
                cfg: TrainConfig) -> SampleLossBreakdown:
    logits = np.asarray(out.label_logits, dtype=float)
    z = _as_indicator(labels, logits.shape[-1])
    bce, card = batch_losses(out, z, stats, cfg)
    return SampleLossBreakdown(float(bce[0]), float(card[0]))


def sample_loss_grad(out: DualOutput, labels, stats: CardinalityStats,
                     cfg: TrainConfig) -> DualOutput:
    logits = np.asarray(out.label_logits, dtype=float)
    z = _as_indicator(labels, logits.shape[-1])
    g = batch_loss_grads(out, z, stats, cfg)
    return DualOutput(g.label_logits[0], g.card_preacts[0])


def data_loss_and_grad(params: ModelParams, X, Z, stats: CardinalityStats, cfg: TrainConfig,
                       mode: str = "eval", rng=None, dropout: float = 0.0):
    """Mean per-sample loss over a batch and its parameter gradient (no regulariser)."""
    w_bce, w_card = TERMS[cfg.terms]
    out, cache = network.forward(params, X, mode=mode, rng=rng, dropout=dropout)
    bce, card = batch_losses(out, Z, stats, cfg)
    n = bce.shape[0]
    g = batch_loss_grads(out, Z, stats, cfg)
    g = DualOutput(w_bce * g.label_logits / n, w_card * g.card_preacts / n)
    return float(np.mean(w_bce * bce + w_card * card)), network.backward(params, cache, g)


def objective_and_grad(params: ModelParams, X, Z, stats: CardinalityStats, cfg: TrainConfig):
    """Eval-mode ``batch_objective`` together with its exact gradient."""
    value, grads = data_loss_and_grad(params, X, Z, stats, cfg)
    value += cfg.gamma * params.weight_sq_norm()
    grads = ModelParams([g + 2.0 * cfg.gamma * w for g, w in zip(grads.weights, params.weights)],
                        grads.biases)
    return value, grads


def batch_objective(params: ModelParams, batch, stats: CardinalityStats, cfg: TrainConfig) -> float:
    """Mean sample loss (eval mode) plus ``gamma * ||W||^2``.

    ``batch`` is anything with ``features`` and ``indicators()`` (a Dataset), or
    a list of ``(x, labels)`` pairs. With ``cfg.terms`` other than ``joint``
    only the selected summand counts.
    """
    X, Z = _unpack(batch, params)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    w_bce, w_card = TERMS[cfg.terms]
    out, _ = network.forward(params, X)
    bce, card = batch_losses(out, Z, stats, cfg)
    return float(np.mean(w_bce * bce + w_card * card) + cfg.gamma * params.weight_sq_norm())


def _unpack(batch, params: ModelParams):
    if hasattr(batch, "indicators"):
        return np.asarray(batch.features, dtype=float), batch.indicators()
    batch = list(batch)
    if not batch:
        raise ValueError("empty batch")
    M = (params.weights[-1].shape[1] - 1) // 2
    X = np.array([np.asarray(x, dtype=float) for x, _ in batch])
    Z = np.array([_as_indicator(y, M) for _, y in batch])
    return X, Z
