"""Joint learning of set cardinality and label distributions, with exact MAP set decoding."""

from .data import Dataset, Sample, SynthConfig, cardinality_stats, generate, read_dataset, split, write_dataset
from .inference import MapResult, label_scores, map_set, sequential_set, topk_set
from .loss import TrainConfig, batch_objective, sample_loss, sample_loss_grad
from .metrics import EvalReport, best_k, cardinality_error, evaluate
from .network import Architecture, DualOutput, ModelParams, alpha_link, backward, forward, init
from .set_model import CardinalityStats, LabelSet, dc_grad_alpha, dc_log_pmf, dc_pmf, set_log_density
from .training import train

__version__ = "0.1.0"
