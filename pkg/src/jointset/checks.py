"""Randomised verification suite: fast paths against brute force and finite differences.

Each ``check_*`` function returns a :class:`CheckResult`. ``run_all`` runs the
whole suite; ``set-predict verify`` is a thin wrapper around it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import inference, loss, metrics, network, oracle, set_model
from .data import SynthConfig, cardinality_stats, generate
from .network import Architecture, DualOutput
from .rng import stream
from .set_model import CardinalityStats, LabelSet
from .training import gradient_descent

U_GRID = (0.5, 1.0, 2.36, 10.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    trials: int
    max_error: float
    failures: int = 0
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return (f"[{status}] {self.name}: trials={self.trials} failures={self.failures} "
                f"max_error={self.max_error:.3e} time={self.seconds:.2f}s{extra}")


def random_stats(rng: np.random.Generator, M: int) -> CardinalityStats:
    if rng.random() < 0.2:
        return CardinalityStats([0] * (M + 1))
    total = int(rng.integers(1, 200))
    probs = rng.dirichlet(np.full(M + 1, 0.7))
    return CardinalityStats(rng.multinomial(total, probs).tolist())


def random_instance(rng: np.random.Generator, M: int):
    out = DualOutput(rng.normal(0.0, 3.0, M), rng.normal(0.0, 3.0, M + 1))
    return out, random_stats(rng, M), float(rng.choice(U_GRID))


def rel_error(a, b) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)


def check_map_oracle(trials: int = 1000, max_labels: int = 12, seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    worst, failures, n = 0.0, 0, 0
    for M in range(1, max_labels + 1):
        rng = stream(seed, "map-oracle", M)
        for _ in range(trials):
            out, stats, u = random_instance(rng, M)
            fast = inference.map_set(out, stats, u)
            slow = oracle.brute_force_map(out, stats, u)
            err = abs(fast.log_score - slow.log_score)
            worst = max(worst, err)
            if fast.labels.members != slow.labels or err > 1e-9:
                failures += 1
            n += 1
    return CheckResult("map_oracle_equivalence", failures == 0, n, worst, failures,
                       time.perf_counter() - t0)


def random_network_case(rng: np.random.Generator):
    l = int(rng.integers(1, 11))
    M = int(rng.integers(1, 7))
    hidden = tuple(int(h) for h in rng.integers(1, 17, size=int(rng.integers(1, 3))))
    arch = Architecture(l, M, hidden, dropout=0.0)
    params = network.init(arch, int(rng.integers(2**31)))
    # non-zero biases so the bias gradients are exercised too
    params = network.ModelParams(params.weights, [rng.normal(0, 0.5, b.shape) for b in params.biases])
    x = rng.normal(0.0, 1.0, l)
    labels = LabelSet(rng.choice(M, size=int(rng.integers(0, M + 1)), replace=False).tolist(), M)
    cfg = loss.TrainConfig(gamma=float(rng.choice([0.0, 5e-4, 0.05])),
                           bce_mode=str(rng.choice(loss.BCE_MODES)))
    return params, x, labels, random_stats(rng, M), cfg


def check_gradients(trials: int = 100, seed: int = 0, step: float = 1e-5, tol: float = 1e-4,
                    inject: float = 0.0) -> CheckResult:
    """End-to-end analytic gradient against central differences.

    ``inject`` adds a deliberate error to one analytic entry (negative control).
    """
    t0 = time.perf_counter()
    rng = stream(seed, "gradients")
    worst, failures = 0.0, 0
    for _ in range(trials):
        params, x, labels, stats, cfg = random_network_case(rng)
        X, Z = x[None, :], labels.indicator()[None, :]
        _, grads = loss.objective_and_grad(params, X, Z, stats, cfg)
        analytic = grads.flatten()
        analytic[0] += inject

        def f(flat):
            return loss.objective_and_grad(params.unflatten(flat), X, Z, stats, cfg)[0]

        numeric = oracle.finite_diff_grad(f, params.flatten(), step)
        mask = np.maximum(np.abs(analytic), np.abs(numeric)) > 1e-6
        err = float(rel_error(analytic, numeric)[mask].max()) if mask.any() else 0.0
        worst = max(worst, err)
        failures += err > tol
    return CheckResult("gradient_exactness", failures == 0, trials, worst, failures,
                       time.perf_counter() - t0)


def check_dc(trials: int = 1000, seed: int = 0, step: float = 1e-5) -> CheckResult:
    """Normalisation, positivity and ``dc_grad_alpha`` vs finite differences.

    Concentrations are log-uniform on [0.1, 10]; histograms hold < 200 samples.
    """
    t0 = time.perf_counter()
    rng = stream(seed, "dc")
    worst_norm, worst_grad, failures = 0.0, 0.0, 0
    for _ in range(trials):
        M = int(rng.integers(1, 13))
        alpha = np.exp(rng.uniform(np.log(0.1), np.log(10.0), M + 1))
        stats = random_stats(rng, M)
        pmf = set_model.dc_pmf(alpha, stats)
        norm_err = abs(pmf.sum() - 1.0)
        m = int(rng.integers(0, M + 1))
        g = set_model.dc_grad_alpha(m, alpha, stats)
        fd = oracle.finite_diff_grad(lambda a: set_model.dc_log_pmf(m, a, stats), alpha, step)
        mask = np.maximum(np.abs(g), np.abs(fd)) > 1e-9
        gerr = float(rel_error(g, fd)[mask].max()) if mask.any() else 0.0
        worst_norm, worst_grad = max(worst_norm, norm_err), max(worst_grad, gerr)
        failures += norm_err > 1e-12 or not np.all(pmf > 0) or gerr > 1e-6
    return CheckResult("dc_soundness", failures == 0, trials, max(worst_norm, worst_grad), failures,
                       time.perf_counter() - t0,
                       f"max |sum-1|={worst_norm:.1e}, max grad rel err={worst_grad:.1e}")


def check_threshold(trials: int = 1000, seed: int = 0) -> CheckResult:
    """Under a uniform cardinality pmf, MAP keeps exactly the labels with ``u sigma(O) > 1``."""
    t0 = time.perf_counter()
    rng = stream(seed, "threshold")
    failures = 0
    for i in range(trials):
        M = int(rng.integers(1, 13))
        u = 2.36 if i % 4 == 0 else float(np.exp(rng.uniform(np.log(0.5), np.log(20.0))))
        stats = CardinalityStats([int(rng.integers(0, 50))] * (M + 1))
        out = DualOutput(rng.normal(0.0, 3.0, M), np.full(M + 1, rng.normal(0.0, 2.0)))
        expected = {l for l in range(M) if u * set_model.sigmoid(out.label_logits[l]) > 1.0}
        fast = inference.map_set(out, stats, u).labels.members
        slow = oracle.brute_force_map(out, stats, u).labels
        failures += not (fast == expected == slow)
    return CheckResult("threshold_reduction", failures == 0, trials, 0.0, failures,
                       time.perf_counter() - t0)


def _permute_output(out: DualOutput, perm: np.ndarray) -> DualOutput:
    # new label j is old label perm[j]
    return DualOutput(out.label_logits[perm], out.card_preacts)


def check_invariance(trials: int = 500, seed: int = 0) -> CheckResult:
    """Joint relabelling invariance and score-raising stability."""
    t0 = time.perf_counter()
    rng = stream(seed, "invariance")
    worst, failures = 0.0, 0
    for _ in range(trials):
        M = int(rng.integers(1, 11))
        out, stats, u = random_instance(rng, M)
        perm = rng.permutation(M)
        inv = np.argsort(perm)
        bad = False

        labels = rng.choice(M, size=int(rng.integers(0, M + 1)), replace=False).tolist()
        a = set_model.set_log_density(labels, out.label_logits, out.alpha, stats, u)
        b = set_model.set_log_density([int(inv[l]) for l in labels],
                                      out.label_logits[perm], out.alpha, stats, u)
        worst = max(worst, abs(a - b))
        bad |= abs(a - b) > 1e-12

        res = inference.map_set(out, stats, u)
        res_p = inference.map_set(_permute_output(out, perm), stats, u)
        mapped = {int(perm[j]) for j in res_p.labels.members}
        # equal-logit ties could legitimately resolve differently after relabelling
        if len(np.unique(out.label_logits)) == M:
            bad |= mapped != set(res.labels.members)
        bad |= abs(res.log_score - res_p.log_score) > 1e-9

        n = int(rng.integers(1, 6))
        gt = [rng.choice(M, size=int(rng.integers(0, M + 1)), replace=False).tolist() for _ in range(n)]
        pr = [rng.choice(M, size=int(rng.integers(0, M + 1)), replace=False).tolist() for _ in range(n)]
        r1 = metrics.evaluate(pr, gt, M).to_dict()
        r2 = metrics.evaluate([[int(inv[l]) for l in s] for s in pr],
                              [[int(inv[l]) for l in s] for s in gt], M).to_dict()
        order = rng.permutation(n)
        r3 = metrics.evaluate([pr[i] for i in order], [gt[i] for i in order], M).to_dict()
        merr = max(abs(r1[k] - r[k]) for r in (r2, r3) for k in r1)
        worst = max(worst, merr)
        bad |= merr > 1e-12

        if res.m_star > 0:
            l = int(rng.choice(res.labels.sorted()))
            raised = DualOutput(out.label_logits.copy(), out.card_preacts)
            raised.label_logits[l] += float(rng.exponential(2.0))
            bad |= l not in inference.map_set(raised, stats, u).labels
            bad |= l not in oracle.brute_force_map(raised, stats, u).labels
        failures += bool(bad)
    return CheckResult("invariance_suite", failures == 0, trials, worst, failures,
                       time.perf_counter() - t0)


def metrics_fixture():
    gt = [{0, 1}, {1, 2}]
    pred = [{0, 2}, {1, 2}]
    return pred, gt


def check_metrics_fixture() -> CheckResult:
    t0 = time.perf_counter()
    pred, gt = metrics_fixture()
    r = metrics.evaluate(pred, gt, 3)
    expected = dict(c_p=5 / 6, c_r=5 / 6, c_f1=5 / 6, o_p=0.75, o_r=0.75, o_f1=0.75,
                    i_p=0.75, i_r=0.75, i_f1=0.75)
    worst = max(abs(getattr(r, k) - v) for k, v in expected.items())
    ok = worst <= 1e-15
    # exhaustive k scan against an explicit recomputation
    scores = np.array([[2.0, -1.0, 0.5], [-0.3, 1.2, 0.9]])
    for family in metrics.F1_FAMILIES:
        k, rep = metrics.best_k(scores, gt, 3, family)
        values = [getattr(metrics.evaluate([inference.topk_set(s, kk) for s in scores], gt, 3), family)
                  for kk in range(1, 4)]
        ok &= k == 1 + int(np.argmax(values)) and getattr(rep, family) == max(values)
    return CheckResult("metrics_fixture", bool(ok), 1 + len(metrics.F1_FAMILIES), worst,
                       int(not ok), time.perf_counter() - t0)


def training_sanity_run(seed: int = 0, n: int = 32, iterations: int = 100, lr: float = 1e-4):
    ds = generate(SynthConfig(l=8, M=5, num_samples=n, max_cardinality=4, seed=seed))
    arch = Architecture(8, 5, (16, 16), dropout=0.0)
    params = network.init(arch, seed)
    cfg = loss.TrainConfig(seed=seed)
    final, trace = gradient_descent(params, ds.features, ds.indicators(), cardinality_stats(ds), cfg,
                                    lr, iterations)
    return final, trace


def check_training_sanity(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    p1, trace = training_sanity_run(seed)
    p2, trace2 = training_sanity_run(seed)
    finite = bool(np.all(np.isfinite(trace))) and p1.is_finite()
    identical = trace == trace2 and p1.flatten().tobytes() == p2.flatten().tobytes()
    ok = finite and identical and trace[-1] < trace[0]
    return CheckResult("training_sanity", ok, len(trace) - 1, 0.0, int(not ok),
                       time.perf_counter() - t0,
                       f"objective {trace[0]:.6f} -> {trace[-1]:.6f}, bitwise repeat={identical}")


def run_all(trials: int = 1000, seed: int = 0, inject_grad_error: float = 0.0) -> list:
    return [
        check_map_oracle(trials, seed=seed),
        check_gradients(max(100, trials // 10), seed=seed, inject=inject_grad_error),
        check_dc(trials, seed=seed),
        check_threshold(trials, seed=seed),
        check_invariance(max(500, trials // 2), seed=seed),
        check_metrics_fixture(),
        check_training_sanity(seed),
    ]
