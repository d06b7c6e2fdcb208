"""
Training the joint network
==========================

One MLP predicts label logits and cardinality concentrations. Training
minimises binary cross-entropy plus the cardinality negative log-likelihood,
and keeps the epoch with the lowest validation objective.
"""

from jointset import Architecture, SynthConfig, TrainConfig, evaluate, generate, split, train
from jointset.data import cardinality_stats
from jointset.inference import decode_batch
from jointset.network import forward

data = generate(SynthConfig(num_samples=2000, noise_scale=0.3, seed=1))
train_set, val_set, test_set = split(data, seed=1)
stats = cardinality_stats(train_set)
print("cardinality histogram:", stats.counts)

arch = Architecture(train_set.input_dim, train_set.num_labels, hidden=(64, 64))
result = train(arch, TrainConfig(epochs=20, seed=1), train_set, val_set, stats)
for rec in result.history[::5]:
    print(f"epoch {rec.epoch:2d}  lr {rec.lr:.5f}  train {rec.train_objective:.4f}  val {rec.val_objective:.4f}")
print("selected epoch", result.selected_epoch)

out = forward(result.params, test_set.features)[0]
report = evaluate(decode_batch(out, stats, 2.36, "jds"), test_set.labels, test_set.num_labels)
print(report.to_text())
