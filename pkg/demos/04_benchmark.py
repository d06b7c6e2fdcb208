"""
Joint decoding against fixed-k and sequential baselines
=======================================================

Trains the joint network, a BCE-only classifier and a cardinality head
fine-tuned from it, then compares decoders on the same test split. Takes
about 15 seconds on one core.
"""

from jointset import SynthConfig, TrainConfig, generate, split
from jointset.benchmark import run

train_set, val_set, test_set = split(generate(SynthConfig(seed=7)), seed=7)
result = run(train_set, val_set, test_set, TrainConfig(seed=7))
print(result.to_text())
