import numpy as np
import pytest

from jointset.network import DualOutput, alpha_preimage
from jointset.set_model import CardinalityStats


def logit(p):
    p = np.asarray(p, dtype=float)
    return np.log(p) - np.log1p(-p)


def make_output(card_pmf, probs, scale=10.0):
    """Output whose cardinality pmf (with empty stats) and label probabilities are given."""
    alpha = scale * np.asarray(card_pmf, dtype=float)
    return DualOutput(logit(probs), alpha_preimage(alpha))


def empty_stats(M):
    return CardinalityStats([0] * (M + 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
