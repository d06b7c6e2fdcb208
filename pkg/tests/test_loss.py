import math

import numpy as np
import pytest

from jointset import loss, network
from jointset.data import SynthConfig, cardinality_stats, generate
from jointset.loss import TrainConfig, batch_objective, sample_loss, sample_loss_grad
from jointset.network import Architecture, DualOutput
from jointset.oracle import finite_diff_grad
from jointset.set_model import CardinalityStats, LabelSet, dc_log_pmf
from jointset.training import gradient_descent

FULL = TrainConfig()
POS = TrainConfig(bce_mode="positive_only")


def _log_sig(o):
    return -math.log1p(math.exp(-o)) if o >= 0 else o - math.log1p(math.exp(o))


def reference_loss(out, labels, stats, cfg):
    """Scalar re-evaluation from dc_log_pmf and elementwise logistic terms."""
    z = [1.0 if i in labels else 0.0 for i in range(len(out.label_logits))]
    bce = 0.0
    for o, zl in zip(out.label_logits, z):
        bce -= zl * _log_sig(o)
        if cfg.bce_mode == "full":
            bce -= (1 - zl) * _log_sig(-o)
    return bce, -dc_log_pmf(len(labels), network.alpha_link(out.card_preacts), stats)


def test_zero_logits_full_bce():
    out = DualOutput(np.zeros(3), np.zeros(4))
    r = sample_loss(out, LabelSet([0], 3), CardinalityStats([1, 1, 1, 1]), FULL)
    assert r.bce_term == pytest.approx(3 * math.log(2), abs=1e-14)
    assert r.bce_term == pytest.approx(2.079442, abs=1e-6)
    assert r.cardinality_term == pytest.approx(math.log(4), abs=1e-14)
    assert r.total == r.bce_term + r.cardinality_term


def test_positive_only_mode():
    out = DualOutput(np.zeros(3), np.zeros(4))
    r = sample_loss(out, [0], CardinalityStats([1, 1, 1, 1]), POS)
    assert r.bce_term == pytest.approx(math.log(2), abs=1e-14)


def test_matches_compositional_reference(rng):
    for _ in range(100):
        M = int(rng.integers(1, 8))
        out = DualOutput(rng.normal(0, 4, M), rng.normal(0, 3, M + 1))
        labels = set(rng.choice(M, size=int(rng.integers(0, M + 1)), replace=False).tolist())
        stats = CardinalityStats(rng.integers(0, 30, M + 1).tolist())
        for cfg in (FULL, POS):
            r = sample_loss(out, labels, stats, cfg)
            bce, card = reference_loss(out, labels, stats, cfg)
            assert r.bce_term == pytest.approx(bce, rel=1e-12, abs=1e-12)
            assert r.cardinality_term == pytest.approx(card, rel=1e-12, abs=1e-12)
            assert r.bce_term >= 0 and r.cardinality_term >= 0


def test_logit_gradient_examples():
    stats = CardinalityStats([1, 1, 1])
    g = sample_loss_grad(DualOutput(np.zeros(2), np.zeros(3)), [0], stats, FULL)
    assert g.label_logits.tolist() == [-0.5, 0.5]


def test_sample_grad_matches_fd(rng):
    for _ in range(100):
        M = int(rng.integers(1, 7))
        logits, card = rng.normal(0, 3, M), rng.normal(0, 3, M + 1)
        labels = rng.choice(M, size=int(rng.integers(0, M + 1)), replace=False).tolist()
        stats = CardinalityStats(rng.integers(0, 30, M + 1).tolist())
        cfg = FULL if rng.random() < 0.5 else POS
        g = sample_loss_grad(DualOutput(logits, card), labels, stats, cfg)
        fd_l = finite_diff_grad(lambda v: sample_loss(DualOutput(v, card), labels, stats, cfg).total, logits)
        fd_c = finite_diff_grad(lambda v: sample_loss(DualOutput(logits, v), labels, stats, cfg).total, card)
        np.testing.assert_allclose(g.label_logits, fd_l, rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(g.card_preacts, fd_c, rtol=1e-6, atol=1e-9)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        sample_loss(DualOutput(np.zeros(3), np.zeros(3)), [0], CardinalityStats([1, 1, 1]), FULL)


def test_bce_goes_to_zero_for_confident_logits():
    stats = CardinalityStats([1, 1, 1, 1])
    z = [1, 0, 1]
    values = []
    for scale in (1.0, 5.0, 20.0, 40.0):
        logits = scale * (2 * np.array(z) - 1.0)
        values.append(sample_loss(DualOutput(logits, np.zeros(4)), [0, 2], stats, FULL).bce_term)
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-15


def _tiny_problem(seed=0):
    ds = generate(SynthConfig(l=5, M=3, num_samples=6, max_cardinality=3, seed=seed))
    arch = Architecture(5, 3, (4,), dropout=0.0)
    return ds, network.init(arch, seed), cardinality_stats(ds)


def test_batch_objective_identities():
    ds, params, stats = _tiny_problem()
    one = ds.subset([0])
    cfg0 = TrainConfig(gamma=0.0)
    out, _ = network.forward(params, one.features[0])
    assert batch_objective(params, one, stats, cfg0) == pytest.approx(
        sample_loss(out, one.labels[0], stats, cfg0).total, rel=1e-14)

    gamma = 0.01
    base = batch_objective(params, ds, stats, TrainConfig(gamma=gamma))
    doubled = batch_objective(params, ds, stats, TrainConfig(gamma=2 * gamma))
    assert doubled - base == pytest.approx(gamma * params.weight_sq_norm(), rel=1e-10)

    # zero-loss hypothetical: a constant offset removes nothing from the regulariser
    pairs = [(s.features, s.labels) for s in ds]
    assert batch_objective(params, pairs, stats, TrainConfig(gamma=gamma)) == pytest.approx(base)
    with pytest.raises(ValueError):
        batch_objective(params, [], stats, FULL)


def test_regulariser_only():
    ds, params, stats = _tiny_problem()
    v = batch_objective(params, ds, stats, TrainConfig(gamma=0.3))
    v0 = batch_objective(params, ds, stats, TrainConfig(gamma=0.0))
    assert v - v0 == pytest.approx(0.3 * params.weight_sq_norm(), rel=1e-12)
    assert params.weight_sq_norm() == pytest.approx(sum(float(np.sum(w ** 2)) for w in params.weights))


def test_end_to_end_gradient(rng):
    ds, params, stats = _tiny_problem(1)
    for cfg in (FULL, POS, TrainConfig(gamma=0.05, terms="bce"), TrainConfig(terms="cardinality")):
        _, grads = loss.objective_and_grad(params, ds.features, ds.indicators(), stats, cfg)
        fd = finite_diff_grad(lambda f: batch_objective(params.unflatten(f), ds, stats, cfg),
                              params.flatten())
        np.testing.assert_allclose(grads.flatten(), fd, rtol=1e-4, atol=1e-8)


def test_descent_reduces_objective():
    ds = generate(SynthConfig(l=8, M=5, num_samples=32, max_cardinality=4, seed=4))
    params = network.init(Architecture(8, 5, (16,), dropout=0.0), 4)
    _, trace = gradient_descent(params, ds.features, ds.indicators(), cardinality_stats(ds),
                                FULL, 1e-4, 100)
    assert np.all(np.isfinite(trace))
    assert trace[-1] < trace[0]
