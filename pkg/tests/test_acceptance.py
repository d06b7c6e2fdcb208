"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

import pytest

from jointset import benchmark, checks
from jointset.data import SynthConfig, generate, split
from jointset.loss import TrainConfig

BENCH_SEED = 7


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if passed else 'FAIL'}: {title}"
                  + (f" ({detail})" if detail else ""))
    return emit


def _check(report, number, title, result, budget=60.0):
    ok = result.passed and result.seconds < budget
    report(number, title, ok, result.line())
    assert result.passed, result.line()
    assert result.seconds < budget, f"took {result.seconds:.1f}s"


def test_criterion_1_map_oracle_equivalence(report):
    r = checks.check_map_oracle(trials=1000, max_labels=12, seed=0)
    assert r.trials == 12 * 1000
    _check(report, 1, "MAP decoding equals brute-force enumeration, M = 1..12", r)


def test_criterion_2_gradient_exactness(report):
    _check(report, 2, "end-to-end gradients match central differences",
           checks.check_gradients(trials=100, seed=0, step=1e-5, tol=1e-4))


def test_criterion_3_dc_soundness(report):
    _check(report, 3, "cardinality pmf normalised, positive, gradient exact",
           checks.check_dc(trials=1000, seed=0))


def test_criterion_4_threshold_reduction(report):
    _check(report, 4, "uniform cardinality reduces MAP to u*sigma > 1",
           checks.check_threshold(trials=1000, seed=0))


def test_criterion_5_invariance_suite(report):
    _check(report, 5, "relabelling invariance and score-raising stability",
           checks.check_invariance(trials=500, seed=0))


def test_criterion_6_metrics_fixture(report):
    _check(report, 6, "two-image fixture and exhaustive best-k scan",
           checks.check_metrics_fixture())


def test_criterion_7_synthetic_benchmark(report):
    t0 = time.perf_counter()
    data = generate(SynthConfig(l=20, M=10, num_samples=6000, seed=BENCH_SEED))
    train_set, val_set, test_set = split(data, (0.8, 0.1, 0.1), seed=BENCH_SEED)
    assert (len(train_set), len(val_set), len(test_set)) == (4800, 600, 600)
    result = benchmark.run(train_set, val_set, test_set, TrainConfig(epochs=60, seed=BENCH_SEED))
    seconds = time.perf_counter() - t0
    crit = result.criteria()
    rows = result.rows
    detail = (f"JDS O-F1 {rows['JDS'].o_f1:.3f} vs topk:best {rows['BCE topk:best'].o_f1:.3f}; "
              f"JDS MAE {rows['JDS'].cardinality_mae:.3f} vs modal {rows['BCE topk:modal'].cardinality_mae:.3f}; "
              f"{seconds:.0f}s")
    ok = all(crit.values()) and seconds < 300
    report(7, "synthetic benchmark ordering", ok, detail)
    for name, passed in crit.items():
        report(f"7{'abc'[list(crit).index(name)]}", name, passed)
    print(result.to_text())
    assert crit["jds_of1_vs_topk"]
    assert crit["jds_mae_vs_modal"]
    assert crit["gt_cardinality_dominates"]
    assert seconds < 300


def test_criterion_8_training_sanity(report):
    _check(report, 8, "full-batch descent lowers the objective, bitwise repeatable",
           checks.check_training_sanity(seed=0))
