"""Evaluation metrics, bootstrap confidence intervals, and report rendering."""

import json
from dataclasses import dataclass, field

import numpy as np

from . import labelmodel
from .downstream import MODE_MULTI, MODE_SINGLE


def accuracy(predictions, gold):
    predictions = np.asarray(predictions)
    gold = np.asarray(gold)
    return float(np.mean(predictions == gold))


def instance_prf(pred_sets, gold_sets):
    """Instance-averaged precision/recall/F1 over predicted and true sets.

    Per instance: precision = |S∩T|/|S| (1 when both sets are empty, 0 when
    only S is empty), recall = |S∩T|/|T| (same conventions), F1 = harmonic
    mean (0 when precision + recall = 0).
    """
    precisions = []
    recalls = []
    f1s = []
    for s, t in zip(pred_sets, gold_sets):
        s, t = set(s), set(t)
        hit = len(s & t)
        if not s and not t:
            p = r = 1.0
        else:
            p = hit / len(s) if s else 0.0
            r = hit / len(t) if t else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        precisions.append(p)
        recalls.append(r)
        f1s.append(f)
    return (
        float(np.mean(precisions)),
        float(np.mean(recalls)),
        float(np.mean(f1s)),
    )


def per_class_f1(predictions, gold, num_classes, mode):
    """One-vs-rest F1 per class; 0 where a class never occurs anywhere."""
    out = []
    for c in range(num_classes):
        if mode == MODE_SINGLE:
            in_pred = np.asarray(predictions) == c
            in_gold = np.asarray(gold) == c
            tp = int(np.sum(in_pred & in_gold))
            fp = int(np.sum(in_pred & ~in_gold))
            fn = int(np.sum(~in_pred & in_gold))
        else:
            tp = fp = fn = 0
            for s, t in zip(predictions, gold):
                hit_s, hit_t = c in s, c in t
                tp += hit_s and hit_t
                fp += hit_s and not hit_t
                fn += hit_t and not hit_s
        denom = 2 * tp + fp + fn
        out.append(2 * tp / denom if denom else 0.0)
    return out


def _take(seq, idx):
    if isinstance(seq, np.ndarray):
        return seq[idx]
    return [seq[i] for i in idx]


def bootstrap_ci(metric_fn, predictions, gold, resamples=1000, seed=0):
    """95% percentile bootstrap over instances.

    Resample b draws its indices from a generator seeded by the b-th spawn
    of SeedSequence(seed), so the interval is reproducible and independent
    of evaluation order.
    """
    n = len(gold)
    children = np.random.SeedSequence(seed).spawn(resamples)
    values = np.empty(resamples)
    for b, child in enumerate(children):
        idx = np.random.default_rng(child).integers(0, n, n)
        values[b] = metric_fn(_take(predictions, idx), _take(gold, idx))
    lower, upper = np.percentile(values, [2.5, 97.5])
    return float(lower), float(upper)


@dataclass
class EvalReport:
    """Point metrics with optional 95% CIs, per-class F1, and counts."""

    mode: str
    count: int
    metrics: dict
    ci: dict = field(default_factory=dict)
    per_class_f1: list = field(default_factory=list)

    def to_json(self):
        payload = {
            "mode": self.mode,
            "count": self.count,
            "metrics": self.metrics,
            "ci": {k: list(v) for k, v in self.ci.items()},
            "per_class_f1": self.per_class_f1,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_text(self):
        lines = [f"mode: {self.mode}", f"instances: {self.count}"]
        for name in sorted(self.metrics):
            line = f"{name}: {self.metrics[name]:.4f}"
            if name in self.ci:
                lo, hi = self.ci[name]
                line += f"  (95% CI [{lo:.4f}, {hi:.4f}])"
            lines.append(line)
        for c, value in enumerate(self.per_class_f1):
            lines.append(f"class {c} F1: {value:.4f}")
        return "\n".join(lines) + "\n"


def evaluate(predictions, gold, mode, num_classes=None, resamples=0, seed=0):
    """Score predictions against gold labels; resamples > 0 adds CIs."""
    if mode not in (MODE_SINGLE, MODE_MULTI):
        raise ValueError(f"unknown mode {mode!r}")
    n = len(gold)
    if n == 0:
        raise ValueError("empty test set")
    if len(predictions) != n:
        raise ValueError("predictions and gold have different lengths")
    if num_classes is None:
        if mode == MODE_SINGLE:
            num_classes = int(max(np.max(predictions), np.max(gold))) + 1
        else:
            num_classes = (
                max(
                    (max(s, default=-1) for s in list(predictions) + list(gold)),
                    default=-1,
                )
                + 1
            )

    if mode == MODE_SINGLE:
        metrics = {"accuracy": accuracy(predictions, gold)}
        fns = {"accuracy": accuracy}
    else:
        p, r, f = instance_prf(predictions, gold)
        metrics = {"precision": p, "recall": r, "f1": f}
        fns = {
            "precision": lambda s, t: instance_prf(s, t)[0],
            "recall": lambda s, t: instance_prf(s, t)[1],
            "f1": lambda s, t: instance_prf(s, t)[2],
        }

    ci = {}
    if resamples > 0:
        for name, fn in fns.items():
            ci[name] = bootstrap_ci(fn, predictions, gold, resamples, seed)
    return EvalReport(
        mode=mode,
        count=n,
        metrics=metrics,
        ci=ci,
        per_class_f1=per_class_f1(predictions, gold, num_classes, mode),
    )


def compare_label_models(params, votes, gold):
    """Training-set accuracy of posterior argmax vs plain majority vote."""
    gold = np.asarray(gold)
    post = labelmodel.posterior(params, votes)
    mv = labelmodel.majority_vote(votes, params.num_classes)
    return {
        "data_programming": accuracy(np.argmax(post, axis=1), gold),
        "majority_vote": accuracy(np.argmax(mv, axis=1), gold),
    }
