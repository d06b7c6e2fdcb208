"""Model artifact: one JSON document holding everything inference needs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .loss import TrainConfig
from .network import Architecture, ModelParams
from .set_model import CardinalityStats, check_u

FORMAT_VERSION = 1
DEFAULT_U = 2.36


@dataclass
class ModelArtifact:
    arch: Architecture
    params: ModelParams
    stats: CardinalityStats
    u: float = DEFAULT_U
    train_config: TrainConfig = field(default_factory=TrainConfig)
    selected_epoch: int = 0
    train_objective: float = float("nan")
    val_objective: float = float("nan")

    def __post_init__(self):
        check_u(self.u)
        sizes = self.arch.layer_sizes
        if len(self.params.weights) != len(sizes) - 1:
            raise ValueError("parameter depth does not match architecture")
        for W, b, fi, fo in zip(self.params.weights, self.params.biases, sizes[:-1], sizes[1:]):
            if W.shape != (fi, fo) or b.shape != (fo,):
                raise ValueError("parameter shapes do not match architecture")
        if len(self.stats.counts) != self.arch.num_labels + 1:
            raise ValueError("cardinality stats do not match the label count")

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "architecture": self.arch.to_dict(),
            "params": {
                "weights": [w.tolist() for w in self.params.weights],
                "biases": [b.tolist() for b in self.params.biases],
            },
            "cardinality_stats": {"counts": list(self.stats.counts), "total": self.stats.total},
            "u": float(self.u),
            "train_config": self.train_config.to_dict(),
            "seed": self.train_config.seed,
            "selected_epoch": self.selected_epoch,
            "train_objective": float(self.train_objective),
            "val_objective": float(self.val_objective),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "ModelArtifact":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported artifact format {d.get('format_version')!r}")
        params = ModelParams(
            [np.array(w, dtype=float) for w in d["params"]["weights"]],
            [np.array(b, dtype=float) for b in d["params"]["biases"]],
        )
        return cls(
            Architecture.from_dict(d["architecture"]),
            params,
            CardinalityStats(d["cardinality_stats"]["counts"], d["cardinality_stats"]["total"]),
            d["u"],
            TrainConfig(**d["train_config"]),
            d["selected_epoch"],
            d["train_objective"],
            d["val_objective"],
        )

    @classmethod
    def load(cls, path) -> "ModelArtifact":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
