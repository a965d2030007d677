"""Metric, bootstrap CI, and report tests."""

import json

import numpy as np
import pytest

from conftest import synthetic_votes
from keyclass import labelmodel as lm
from keyclass import metrics as mx
from keyclass.downstream import MODE_MULTI, MODE_SINGLE


def test_accuracy():
    assert mx.accuracy([0, 1, 2, 1], [0, 1, 1, 1]) == 0.75
    assert mx.accuracy([0], [1]) == 0.0


def test_instance_prf_worked_example():
    # gold {A,B}, predicted {B,C}: one hit out of two on each side
    p, r, f = mx.instance_prf([{"B", "C"}], [{"A", "B"}])
    assert (p, r, f) == (0.5, 0.5, 0.5)


def test_instance_prf_empty_conventions():
    assert mx.instance_prf([set()], [set()]) == (1.0, 1.0, 1.0)
    assert mx.instance_prf([set()], [{1}]) == (0.0, 0.0, 0.0)
    assert mx.instance_prf([{1}], [set()]) == (0.0, 0.0, 0.0)


def test_instance_prf_hand_table():
    pred = [{0}, {0, 1}, {1}, {0, 1, 2}, set(), {2}]
    gold = [{0}, {1}, {0, 1}, {2}, set(), {0, 1}]
    # per instance (p, r, f):
    # {0}v{0}: 1, 1, 1
    # {0,1}v{1}: 1/2, 1, 2/3
    # {1}v{0,1}: 1, 1/2, 2/3
    # {0,1,2}v{2}: 1/3, 1, 1/2
    # {}v{}: 1, 1, 1
    # {2}v{0,1}: 0, 0, 0
    p, r, f = mx.instance_prf(pred, gold)
    assert p == pytest.approx((1 + 0.5 + 1 + 1 / 3 + 1 + 0) / 6, abs=1e-12)
    assert r == pytest.approx((1 + 1 + 0.5 + 1 + 1 + 0) / 6, abs=1e-12)
    assert f == pytest.approx((1 + 2 / 3 + 2 / 3 + 0.5 + 1 + 0) / 6, abs=1e-12)


def test_per_class_f1_single_label():
    got = mx.per_class_f1([0, 1, 1, 2], [0, 1, 2, 2], 4, MODE_SINGLE)
    assert got[0] == pytest.approx(1.0)
    assert got[1] == pytest.approx(2 / 3)  # tp=1 fp=1 fn=0
    assert got[2] == pytest.approx(2 / 3)  # tp=1 fp=0 fn=1
    assert got[3] == 0.0  # class never occurs


def test_per_class_f1_multilabel():
    pred = [frozenset({0, 1}), frozenset({1}), frozenset()]
    gold = [frozenset({0}), frozenset({1, 2}), frozenset({2})]
    got = mx.per_class_f1(pred, gold, 3, MODE_MULTI)
    assert got[0] == pytest.approx(1.0)  # tp=1 fp=0 fn=0
    assert got[1] == pytest.approx(2 / 3)  # tp=1 fp=1 fn=0
    assert got[2] == 0.0  # tp=0 fn=2


def bootstrap_oracle(metric_fn, predictions, gold, resamples, seed):
    n = len(gold)
    predictions = np.asarray(predictions)
    gold = np.asarray(gold)
    values = []
    for child in np.random.SeedSequence(seed).spawn(resamples):
        idx = np.random.default_rng(child).integers(0, n, n)
        values.append(metric_fn(predictions[idx], gold[idx]))
    lo, hi = np.percentile(values, [2.5, 97.5])
    return float(lo), float(hi)


def test_bootstrap_ci_matches_oracle():
    rng = np.random.default_rng(0)
    gold = rng.integers(0, 3, 50)
    pred = np.where(rng.random(50) < 0.7, gold, (gold + 1) % 3)
    got = mx.bootstrap_ci(mx.accuracy, pred, gold, resamples=200, seed=9)
    want = bootstrap_oracle(mx.accuracy, pred, gold, 200, 9)
    assert got == want


def test_bootstrap_ci_deterministic_and_contains_point():
    rng = np.random.default_rng(1)
    gold = rng.integers(0, 2, 80)
    pred = np.where(rng.random(80) < 0.8, gold, 1 - gold)
    point = mx.accuracy(pred, gold)
    a = mx.bootstrap_ci(mx.accuracy, pred, gold, resamples=500, seed=3)
    b = mx.bootstrap_ci(mx.accuracy, pred, gold, resamples=500, seed=3)
    assert a == b
    lo, hi = a
    assert lo <= point <= hi
    assert lo <= hi


def test_bootstrap_ci_degenerate_cases():
    # constant metric: zero-width interval at that constant
    gold = np.array([0, 0, 0, 0])
    lo, hi = mx.bootstrap_ci(mx.accuracy, gold, gold, resamples=50, seed=0)
    assert lo == hi == 1.0
    # single resample: both percentiles collapse onto it
    gold = np.array([0, 1, 0, 1])
    pred = np.array([0, 1, 1, 1])
    lo, hi = mx.bootstrap_ci(mx.accuracy, pred, gold, resamples=1, seed=5)
    assert lo == hi


def test_bootstrap_ci_handles_list_inputs():
    pred = [frozenset({0}), frozenset({1}), frozenset({0, 1})]
    gold = [frozenset({0}), frozenset({0}), frozenset({1})]
    lo, hi = mx.bootstrap_ci(
        lambda s, t: mx.instance_prf(s, t)[2], pred, gold, resamples=100, seed=1
    )
    assert 0.0 <= lo <= hi <= 1.0


def test_evaluate_single_label():
    report = mx.evaluate([0, 1, 1], [0, 1, 2], MODE_SINGLE, num_classes=3)
    assert report.mode == MODE_SINGLE
    assert report.count == 3
    assert report.metrics == {"accuracy": pytest.approx(2 / 3)}
    assert report.ci == {}
    assert len(report.per_class_f1) == 3


def test_evaluate_multilabel_with_ci():
    pred = [frozenset({0}), frozenset({1}), frozenset({0, 1})]
    gold = [frozenset({0}), frozenset({0, 1}), frozenset({1})]
    report = mx.evaluate(pred, gold, MODE_MULTI, resamples=50, seed=2)
    assert set(report.metrics) == {"precision", "recall", "f1"}
    assert set(report.ci) == {"precision", "recall", "f1"}
    for name, (lo, hi) in report.ci.items():
        assert 0.0 <= lo <= hi <= 1.0
    assert len(report.per_class_f1) == 2  # classes inferred from the sets


def test_evaluate_errors():
    with pytest.raises(ValueError, match="empty test set"):
        mx.evaluate([], [], MODE_SINGLE)
    with pytest.raises(ValueError, match="different lengths"):
        mx.evaluate([0], [0, 1], MODE_SINGLE)
    with pytest.raises(ValueError, match="unknown mode"):
        mx.evaluate([0], [0], "ordinal")


def test_singleton_multilabel_agrees_with_single_label():
    rng = np.random.default_rng(6)
    gold = rng.integers(0, 3, 40)
    pred = np.where(rng.random(40) < 0.6, gold, (gold + 1) % 3)
    single = mx.evaluate(pred, gold, MODE_SINGLE, num_classes=3)
    multi = mx.evaluate(
        [frozenset({int(x)}) for x in pred],
        [frozenset({int(x)}) for x in gold],
        MODE_MULTI,
        num_classes=3,
    )
    acc = single.metrics["accuracy"]
    assert multi.metrics["precision"] == pytest.approx(acc, abs=1e-12)
    assert multi.metrics["recall"] == pytest.approx(acc, abs=1e-12)
    assert multi.metrics["f1"] == pytest.approx(acc, abs=1e-12)
    assert multi.per_class_f1 == pytest.approx(single.per_class_f1, abs=1e-12)


def test_report_json_deterministic_and_sorted():
    report = mx.evaluate(
        [0, 1, 1, 0], [0, 1, 0, 0], MODE_SINGLE, resamples=20, seed=1
    )
    blob = report.to_json()
    assert blob == report.to_json()
    assert blob.endswith("\n")
    payload = json.loads(blob)
    assert list(payload) == sorted(payload)
    assert payload["count"] == 4
    assert payload["metrics"]["accuracy"] == 0.75
    assert len(payload["ci"]["accuracy"]) == 2


def test_report_text_rendering():
    report = mx.EvalReport(
        mode=MODE_SINGLE,
        count=10,
        metrics={"accuracy": 0.9},
        ci={"accuracy": (0.8, 0.95)},
        per_class_f1=[0.9, 0.8],
    )
    text = report.to_text()
    assert "accuracy: 0.9000  (95% CI [0.8000, 0.9500])" in text
    assert "class 1 F1: 0.8000" in text
    assert text.endswith("\n")


def test_compare_label_models():
    vm, y = synthetic_votes([0.9, 0.8, 0.7, 0.6], [0, 1, 0, 1], 1200, seed=17)
    fitted = lm.fit(vm, 2, seed=2)
    comparison = mx.compare_label_models(fitted, vm, y)
    assert set(comparison) == {"data_programming", "majority_vote"}
    assert 0.0 <= comparison["majority_vote"] <= 1.0
    assert comparison["data_programming"] >= comparison["majority_vote"]
