"""Synthetic multi-label data, JSONL dataset files and cardinality histograms.

Generative process: each class owns a prototype vector; a sample draws a
cardinality from a fixed categorical, then that many distinct classes, and its
features are the sum of their prototypes plus isotropic Gaussian noise.

File format (JSON Lines)::

    {"l": 20, "M": 10}
    {"x": [0.12, ...], "labels": [3, 7]}
    ...
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import stream
from .set_model import CardinalityStats, InvariantError, LabelSet


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    labels: LabelSet


@dataclass
class Dataset:
    features: np.ndarray  # (n, l)
    labels: list  # LabelSet per row
    num_labels: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float).reshape(len(self.labels), -1)

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i) -> Sample:
        return Sample(self.features[i], self.labels[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], [self.labels[i] for i in idx], self.num_labels)

    def indicators(self) -> np.ndarray:
        Z = np.zeros((len(self), self.num_labels))
        for i, s in enumerate(self.labels):
            Z[i, list(s.members)] = 1.0
        return Z

    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.labels], dtype=int)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.num_labels == other.num_labels
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and [s.sorted() for s in self.labels] == [s.sorted() for s in other.labels]
        )


def default_cardinality_pmf(max_cardinality: int) -> np.ndarray:
    """Skewed towards 1-3 labels, with a geometric tail beyond 3."""
    base = [0.04, 0.36, 0.30, 0.16]
    w = np.array(base[: max_cardinality + 1], dtype=float)
    if max_cardinality > 3:
        tail = 0.5 ** np.arange(1, max_cardinality - 2)
        w = np.concatenate([w, 0.14 * tail / tail.sum()])
    return w / w.sum()


@dataclass(frozen=True)
class SynthConfig:
    l: int = 20
    M: int = 10
    num_samples: int = 6000
    max_cardinality: int = 6
    label_prototype_scale: float = 3.0
    noise_scale: float = 0.5
    seed: int = 0
    orthogonal: bool = False
    cardinality_pmf: tuple | None = field(default=None)

    def __post_init__(self):
        if self.l < 1 or self.M < 1 or self.num_samples < 1:
            raise ValueError("l, M and num_samples must be positive")
        if not 0 <= self.max_cardinality <= self.M:
            raise ValueError(
                f"max_cardinality ({self.max_cardinality}) must lie in [0, M={self.M}]"
            )
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")
        if self.orthogonal and self.l < self.M:
            raise ValueError("orthogonal prototypes need l >= M")
        if self.cardinality_pmf is not None:
            q = np.asarray(self.cardinality_pmf, dtype=float)
            if q.shape != (self.max_cardinality + 1,) or np.any(q < 0) or not np.isclose(q.sum(), 1):
                raise ValueError("cardinality_pmf must be a distribution over 0..max_cardinality")

    def pmf(self) -> np.ndarray:
        if self.cardinality_pmf is not None:
            return np.asarray(self.cardinality_pmf, dtype=float)
        return default_cardinality_pmf(self.max_cardinality)


def prototypes(cfg: SynthConfig) -> np.ndarray:
    rng = stream(cfg.seed, "synth", "prototypes")
    raw = rng.standard_normal((cfg.M, cfg.l))
    if cfg.orthogonal:
        q, _ = np.linalg.qr(raw.T)
        return cfg.label_prototype_scale * q.T[: cfg.M]
    return cfg.label_prototype_scale * raw / np.sqrt(cfg.l)


def generate(cfg: SynthConfig) -> Dataset:
    protos = prototypes(cfg)
    q = cfg.pmf()
    rng = stream(cfg.seed, "synth", "samples")
    sizes = rng.choice(len(q), size=cfg.num_samples, p=q)
    labels, feats = [], np.empty((cfg.num_samples, cfg.l))
    for i, m in enumerate(sizes):
        chosen = rng.choice(cfg.M, size=int(m), replace=False)
        labels.append(LabelSet(chosen.tolist(), cfg.M))
        feats[i] = protos[chosen].sum(axis=0)
    feats += cfg.noise_scale * rng.standard_normal(feats.shape)
    return Dataset(feats, labels, cfg.M)


def cardinality_stats(dataset: Dataset) -> CardinalityStats:
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    counts = np.bincount(dataset.sizes(), minlength=dataset.num_labels + 1)
    return CardinalityStats(counts.tolist(), len(dataset))


def split(dataset: Dataset, fractions=(0.8, 0.1, 0.1), seed: int = 0):
    fr = np.asarray(fractions, dtype=float)
    if fr.shape != (3,) or np.any(fr <= 0) or not np.isclose(fr.sum(), 1.0):
        raise ValueError("fractions must be three positive numbers summing to 1")
    n = len(dataset)
    perm = stream(seed, "split").permutation(n)
    n_train = int(round(n * fr[0]))
    n_val = int(round(n * fr[1]))
    if n_train + n_val > n:
        raise ValueError("dataset too small for these fractions")
    return (
        dataset.subset(perm[:n_train]),
        dataset.subset(perm[n_train : n_train + n_val]),
        dataset.subset(perm[n_train + n_val :]),
    )


def dumps_dataset(dataset: Dataset) -> str:
    lines = [json.dumps({"l": dataset.input_dim, "M": dataset.num_labels})]
    for x, s in zip(dataset.features, dataset.labels):
        # repr-based float encoding round-trips exactly
        lines.append(json.dumps({"x": [float(v) for v in x], "labels": s.sorted()}))
    return "\n".join(lines) + "\n"


def write_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(dumps_dataset(dataset), encoding="utf-8")


def read_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
            l, M = int(header["l"]), int(header["M"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DatasetFormatError(f"{path}:1: bad header ({exc})") from None
        feats, labels = [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                x = [float(v) for v in rec["x"]]
                lab = [int(v) for v in rec["labels"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetFormatError(f"{path}:{lineno}: malformed sample ({exc})") from None
            if len(x) != l:
                raise DatasetFormatError(f"{path}:{lineno}: expected {l} features, got {len(x)}")
            try:
                labels.append(LabelSet(lab, M))
            except InvariantError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from None
            feats.append(x)
    return Dataset(np.array(feats, dtype=float).reshape(len(labels), l), labels, M)
