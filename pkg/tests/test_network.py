import math

import numpy as np
import pytest

from jointset import network
from jointset.network import Architecture, DualOutput, ModelParams, OptimizerState
from jointset.oracle import finite_diff_grad


def affine_chain(params, x):
    """Layer recurrence re-evaluated with plain Python loops."""
    h = [float(v) for v in x]
    n = len(params.weights)
    for k, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = [float(b[j]) + sum(h[i] * float(W[i, j]) for i in range(len(h))) for j in range(W.shape[1])]
        h = z if k == n - 1 else [max(v, 0.0) for v in z]
    return np.array(h)


def test_architecture_validation():
    assert Architecture(4, 3, (8, 8)).output_dim == 7
    with pytest.raises(ValueError):
        Architecture(0, 3)
    with pytest.raises(ValueError):
        Architecture(4, 3, (0,))
    with pytest.raises(ValueError):
        Architecture(4, 3, dropout=1.0)


def test_init_deterministic_and_shaped():
    arch = Architecture(4, 3, (8, 8))
    a, b, c = network.init(arch, 1), network.init(arch, 1), network.init(arch, 2)
    assert a.flatten().tobytes() == b.flatten().tobytes()
    assert not np.array_equal(a.flatten(), c.flatten())
    assert [w.shape for w in a.weights] == [(4, 8), (8, 8), (8, 7)]
    assert all(np.all(bias == 0) for bias in a.biases)


def test_init_scale():
    p = network.init(Architecture(400, 2, (300,)), 0)
    assert np.std(p.weights[0]) == pytest.approx(1 / math.sqrt(400), rel=0.02)


def test_zero_params_give_half_probabilities(rng):
    params = network.init(Architecture(5, 4, (6,)), 0).zeros_like()
    out, _ = network.forward(params, rng.normal(size=5))
    assert np.all(out.label_logits == 0)
    assert out.card_preacts.shape == (5,)


def test_forward_matches_loop_reference(rng):
    for seed in range(20):
        arch = Architecture(int(rng.integers(1, 7)), int(rng.integers(1, 5)),
                            tuple(int(h) for h in rng.integers(1, 9, size=2)))
        params = network.init(arch, seed)
        params = ModelParams(params.weights, [rng.normal(size=b.shape) for b in params.biases])
        x = rng.normal(size=arch.input_dim)
        out, _ = network.forward(params, x)
        ref = affine_chain(params, x)
        np.testing.assert_allclose(np.concatenate([out.label_logits, out.card_preacts]), ref,
                                   rtol=1e-12, atol=1e-12)


def test_eval_forward_is_pure(rng):
    params = network.init(Architecture(3, 2), 0)
    before = params.flatten().copy()
    x = rng.normal(size=(4, 3))
    o1, _ = network.forward(params, x)
    o2, _ = network.forward(params, x)
    assert np.array_equal(o1.label_logits, o2.label_logits)
    assert np.array_equal(params.flatten(), before)


def test_forward_dimension_mismatch():
    params = network.init(Architecture(3, 2), 0)
    with pytest.raises(ValueError):
        network.forward(params, np.zeros(4))


def test_alpha_link_values():
    assert network.alpha_link(0.0) == pytest.approx(math.log(2) + 1e-6, abs=1e-15)
    assert network.alpha_link(0.0) == pytest.approx(0.693148, abs=1e-6)
    exact = 20.0 + math.log1p(math.exp(-20.0)) + 1e-6
    assert abs(network.alpha_link(20.0) - exact) / exact < 1e-8
    assert network.alpha_link(20.0) == pytest.approx(20.0, rel=1e-7)
    tiny = network.alpha_link(-40.0)
    assert tiny > 0 and tiny == pytest.approx(1e-6, rel=1e-9)
    a = np.linspace(-50, 50, 101)
    assert np.all(np.diff(network.alpha_link(a)) > 0)
    np.testing.assert_allclose(network.alpha_link(network.alpha_preimage([0.3, 2.0, 40.0])),
                               [0.3, 2.0, 40.0], rtol=1e-12)


def test_alpha_link_grad_matches_fd():
    a = np.array([-5.0, -0.3, 0.0, 2.0, 30.0])
    fd = finite_diff_grad(lambda v: float(np.sum(network.alpha_link(v))), a)
    np.testing.assert_allclose(network.alpha_link_grad(a), fd, rtol=1e-7)


def _scalar_of_output(out, weights_l, weights_c):
    return float(np.sum(out.label_logits * weights_l) + np.sum(out.card_preacts * weights_c))


def test_backward_matches_finite_differences(rng):
    for seed in range(30):
        arch = Architecture(int(rng.integers(1, 6)), int(rng.integers(1, 4)),
                            tuple(int(h) for h in rng.integers(1, 8, size=int(rng.integers(1, 3)))),
                            dropout=0.0)
        params = network.init(arch, seed)
        params = ModelParams(params.weights, [rng.normal(0, 0.3, b.shape) for b in params.biases])
        X = rng.normal(size=(3, arch.input_dim))
        wl = rng.normal(size=(3, arch.num_labels))
        wc = rng.normal(size=(3, arch.num_labels + 1))
        _, cache = network.forward(params, X)
        grads = network.backward(params, cache, DualOutput(wl, wc))

        def f(flat):
            return _scalar_of_output(network.forward(params.unflatten(flat), X)[0], wl, wc)

        fd = finite_diff_grad(f, params.flatten())
        np.testing.assert_allclose(grads.flatten(), fd, rtol=1e-4, atol=1e-8)


def test_backward_zero_and_additive(rng):
    arch = Architecture(4, 3, (5, 5), dropout=0.0)
    params = network.init(arch, 0)
    X = rng.normal(size=(2, 4))
    out, cache = network.forward(params, X)
    zero = network.backward(params, cache, DualOutput(np.zeros((2, 3)), np.zeros((2, 4))))
    assert np.all(zero.flatten() == 0)

    g = DualOutput(rng.normal(size=(2, 3)), rng.normal(size=(2, 4)))
    total = network.backward(params, cache, g).flatten()
    parts = 0
    for i in range(2):
        _, c = network.forward(params, X[i])
        parts = parts + network.backward(params, c, g.row(i)).flatten()
    np.testing.assert_allclose(total, parts, rtol=1e-12, atol=1e-14)


def test_backward_rejects_stale_cache(rng):
    arch = Architecture(3, 2, (4,), dropout=0.0)
    params = network.init(arch, 0)
    _, cache = network.forward(params, rng.normal(size=3))
    other = params.copy()
    with pytest.raises(ValueError):
        network.backward(other, cache, DualOutput(np.zeros(2), np.zeros(3)))


def test_dropout_reuses_mask_and_needs_rng(rng):
    arch = Architecture(3, 2, (50,), dropout=0.5)
    params = network.init(arch, 0)
    with pytest.raises(ValueError):
        network.forward(params, np.ones(3), mode="train", dropout=0.5)
    out, cache = network.forward(params, np.ones(3), mode="train", rng=rng, dropout=0.5)
    mask = cache.masks[0]
    assert set(np.unique(mask)) <= {0.0, 2.0}
    g = network.backward(params, cache, DualOutput(np.ones(2), np.zeros(3)))
    dead = mask[0] == 0
    assert np.all(g.weights[0][:, dead] == 0)


def test_dropout_expectation_matches_eval():
    arch = Architecture(6, 3, (40,), dropout=0.5)
    params = network.init(arch, 3)
    x = np.linspace(-1, 1, 6)
    rng = np.random.default_rng(0)
    X = np.repeat(x[None, :], 20000, axis=0)
    train_out, _ = network.forward(params, X, mode="train", rng=rng, dropout=0.5)
    eval_out, _ = network.forward(params, x)
    mean = np.concatenate([train_out.label_logits.mean(0), train_out.card_preacts.mean(0)])
    ref = np.concatenate([eval_out.label_logits, eval_out.card_preacts])
    assert np.max(np.abs(mean - ref)) <= 0.01 * max(1.0, np.max(np.abs(ref)))


def _one_param(value):
    return ModelParams([np.array([[value]])], [np.array([0.0])])


def test_sgd_plain_step():
    p = _one_param(1.0)
    g = _one_param(0.5)
    state = network.init_optimizer(p, 0.1)
    new, _ = network.sgd_step(p, g, state, lr=0.1, momentum=0.0, weight_decay=0.0)
    assert new.weights[0][0, 0] == pytest.approx(1.0 - 0.1 * 0.5, abs=1e-16)


def test_sgd_weight_decay_only():
    p = _one_param(1.0)
    state = network.init_optimizer(p, 0.1)
    new, _ = network.sgd_step(p, p.zeros_like(), state, lr=0.1, momentum=0.0, weight_decay=5e-4)
    assert new.weights[0][0, 0] == pytest.approx(0.99995, abs=1e-15)
    assert new.biases[0][0] == 0.0


def test_sgd_zero_everything_is_identity():
    p = network.init(Architecture(3, 2), 0)
    state = network.init_optimizer(p, 0.1)
    new, st = network.sgd_step(p, p.zeros_like(), state, lr=0.1, momentum=0.9, weight_decay=0.0)
    assert np.array_equal(new.flatten(), p.flatten())
    assert isinstance(st, OptimizerState)


def test_sgd_momentum_accumulates():
    p = _one_param(0.0)
    g = _one_param(1.0)
    state = network.init_optimizer(p, 1.0)
    p1, state = network.sgd_step(p, g, state, lr=1.0, momentum=0.9)
    p2, state = network.sgd_step(p1, g, state, lr=1.0, momentum=0.9)
    assert p2.weights[0][0, 0] == pytest.approx(-(1.0 + 1.9))


def test_lr_schedule():
    assert network.lr_schedule(0, 0.001) == 0.001
    assert network.lr_schedule(1, 0.001) == pytest.approx(0.00095, abs=1e-18)
    values = [network.lr_schedule(e, 0.001) for e in range(100)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        network.lr_schedule(-1, 0.001)
