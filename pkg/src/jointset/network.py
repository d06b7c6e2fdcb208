"""Shared feed-forward network producing label logits and cardinality concentrations.

A ReLU MLP trunk feeds a single linear head with ``M + (M + 1)`` outputs: the
first ``M`` are label logits, the rest are pre-activations mapped through
``alpha_link`` to strictly positive Dirichlet concentrations. Gradients are
computed by hand; all arithmetic is float64.

Arrays may carry a leading batch axis: ``forward`` accepts ``x`` of shape
``(l,)`` or ``(n, l)`` and returns outputs with matching leading shape.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .rng import stream

ALPHA_FLOOR = 1e-6

_param_ids = itertools.count()


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    num_labels: int
    hidden: tuple = (64, 64)
    dropout: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.num_labels < 1:
            raise ValueError("input_dim and num_labels must be >= 1")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")

    @property
    def output_dim(self) -> int:
        return self.num_labels + self.num_labels + 1

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.output_dim]

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "num_labels": self.num_labels,
            "hidden": list(self.hidden),
            "dropout": self.dropout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Architecture":
        return cls(d["input_dim"], d["num_labels"], tuple(d["hidden"]), d["dropout"])


@dataclass(eq=False)
class ModelParams:
    """Per-layer weights ``W[k]`` of shape (fan_in, fan_out) and biases ``b[k]``."""

    weights: list
    biases: list
    uid: int = field(default_factory=lambda: next(_param_ids), compare=False, repr=False)

    def copy(self) -> "ModelParams":
        return ModelParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def zeros_like(self) -> "ModelParams":
        return ModelParams(
            [np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases]
        )

    def arrays(self) -> list:
        return [*self.weights, *self.biases]

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def unflatten(self, flat) -> "ModelParams":
        flat = np.asarray(flat, dtype=float)
        out, pos = [], 0
        for a in self.arrays():
            out.append(flat[pos : pos + a.size].reshape(a.shape).copy())
            pos += a.size
        if pos != flat.size:
            raise ValueError("flat vector has the wrong length")
        n = len(self.weights)
        return ModelParams(out[:n], out[n:])

    def weight_sq_norm(self) -> float:
        return float(sum(np.sum(w * w) for w in self.weights))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def __add__(self, other: "ModelParams") -> "ModelParams":
        return ModelParams(
            [a + b for a, b in zip(self.weights, other.weights)],
            [a + b for a, b in zip(self.biases, other.biases)],
        )


@dataclass
class DualOutput:
    label_logits: np.ndarray
    card_preacts: np.ndarray

    @property
    def num_labels(self) -> int:
        return self.label_logits.shape[-1]

    @property
    def alpha(self) -> np.ndarray:
        return alpha_link(self.card_preacts)

    def row(self, i: int) -> "DualOutput":
        return DualOutput(self.label_logits[i], self.card_preacts[i])


@dataclass
class ActivationCache:
    params_id: int
    inputs: list  # input to each affine layer, shape (n, fan_in)
    preacts: list  # hidden pre-activations before ReLU
    masks: list  # dropout multipliers per hidden layer, or None
    squeeze: bool


@dataclass
class OptimizerState:
    velocity: ModelParams
    lr: float
    epoch: int = 0


def init(arch: Architecture, seed: int) -> ModelParams:
    """Gaussian weights with std ``1/sqrt(fan_in)``, zero biases."""
    rng = stream(seed, "init")
    sizes = arch.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights, biases)


def softplus(a):
    return np.logaddexp(0.0, a)


def alpha_link(card_preacts) -> np.ndarray:
    """``softplus(a) + 1e-6``: strictly positive, smooth and monotone."""
    return softplus(np.asarray(card_preacts, dtype=float)) + ALPHA_FLOOR


def alpha_link_grad(card_preacts) -> np.ndarray:
    a = np.asarray(card_preacts, dtype=float)
    e = np.exp(-np.abs(a))
    return np.where(a >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def alpha_preimage(alpha) -> np.ndarray:
    """Inverse of ``alpha_link``; handy for building outputs with a chosen alpha."""
    s = np.asarray(alpha, dtype=float) - ALPHA_FLOOR
    if np.any(s <= 0):
        raise ValueError("alpha must exceed the link floor")
    return s + np.log(-np.expm1(-s))


def forward(params: ModelParams, x, mode: str = "eval", rng: np.random.Generator | None = None,
            dropout: float = 0.0):
    """Evaluate the network. ``mode='train'`` applies inverted dropout to hidden units."""
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    h = np.atleast_2d(x)
    if h.shape[1] != params.weights[0].shape[0]:
        raise ValueError(f"expected {params.weights[0].shape[0]} features, got {h.shape[1]}")
    use_dropout = mode == "train" and dropout > 0.0
    if use_dropout and rng is None:
        raise ValueError("train mode with dropout needs an rng")
    keep = 1.0 - dropout

    inputs, preacts, masks = [], [], []
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        inputs.append(h)
        z = h @ W + b
        preacts.append(z)
        h = np.maximum(z, 0.0)
        if use_dropout:
            mask = (rng.random(h.shape) < keep) / keep
            h = h * mask
            masks.append(mask)
        else:
            masks.append(None)
    inputs.append(h)
    out = h @ params.weights[-1] + params.biases[-1]

    M = (out.shape[1] - 1) // 2
    logits, card = out[:, :M], out[:, M:]
    if squeeze:
        logits, card = logits[0], card[0]
    cache = ActivationCache(params.uid, inputs, preacts, masks, squeeze)
    return DualOutput(logits, card), cache


def backward(params: ModelParams, cache: ActivationCache, grad_dual: DualOutput) -> ModelParams:
    """Chain-rule gradients of a scalar through ``forward``, summed over the batch."""
    if cache.params_id != params.uid or len(cache.inputs) != len(params.weights):
        raise ValueError("activation cache does not belong to these parameters")
    g = np.concatenate(
        [np.atleast_2d(grad_dual.label_logits), np.atleast_2d(grad_dual.card_preacts)], axis=1
    )
    if g.shape != (cache.inputs[0].shape[0], params.weights[-1].shape[1]):
        raise ValueError("gradient shape does not match cached forward pass")
    n_layers = len(params.weights)
    gw = [None] * n_layers
    gb = [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        gw[k] = cache.inputs[k].T @ g
        gb[k] = g.sum(axis=0)
        if k == 0:
            break
        g = g @ params.weights[k].T
        if cache.masks[k - 1] is not None:
            g = g * cache.masks[k - 1]
        g = g * (cache.preacts[k - 1] > 0)
    return ModelParams(gw, gb)


def sgd_step(params: ModelParams, grads: ModelParams, state: OptimizerState,
             lr: float | None = None, momentum: float = 0.9, weight_decay: float = 0.0):
    """Momentum SGD: ``v <- mu v + g + wd w``; ``w <- w - lr v``.

    Weight decay touches weight matrices only, never biases.
    """
    lr = state.lr if lr is None else lr
    vel = state.velocity
    new_w, new_b, vel_w, vel_b = [], [], [], []
    for w, g, v in zip(params.weights, grads.weights, vel.weights):
        v = momentum * v + g + weight_decay * w
        vel_w.append(v)
        new_w.append(w - lr * v)
    for b, g, v in zip(params.biases, grads.biases, vel.biases):
        v = momentum * v + g
        vel_b.append(v)
        new_b.append(b - lr * v)
    return ModelParams(new_w, new_b), OptimizerState(ModelParams(vel_w, vel_b), lr, state.epoch)


def init_optimizer(params: ModelParams, lr: float) -> OptimizerState:
    return OptimizerState(params.zeros_like(), lr, 0)


def lr_schedule(epoch: int, base_lr: float, decay: float = 0.95) -> float:
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    return base_lr * decay**epoch
