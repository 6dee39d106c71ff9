"""Confusion-matrix metrics and the Jensen-Shannon divergence.

Zero-denominator metrics return 0.0 with the metric name collected in
`degenerate` instead of raising, so benchmark loops survive classifiers
that never predict a class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        for name in ("tn", "fp", "fn", "tp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def total(self):
        return self.tn + self.fp + self.fn + self.tp

    def as_array(self):
        return np.array([[self.tn, self.fp], [self.fn, self.tp]])


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("prediction/label length mismatch")
    return ConfusionMatrix(
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
    )


@dataclass
class MetricsReport:
    recall: float
    precision: float
    f1: float
    accuracy: float
    total_mistakes: int
    degenerate: list = field(default_factory=list)

    def as_dict(self):
        return {
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "total_mistakes": self.total_mistakes,
            "degenerate": list(self.degenerate),
        }


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """recall = tp/(tp+fn), precision = tp/(tp+fp), F1 their harmonic
    blend, accuracy, and total mistakes fp+fn."""
    degenerate = []

    def ratio(num, den, name):
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    recall = ratio(cm.tp, cm.tp + cm.fn, "recall")
    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    f1 = ratio(2.0 * precision * recall, precision + recall, "f1")
    accuracy = ratio(cm.tp + cm.tn, cm.total, "accuracy")
    return MetricsReport(recall=recall, precision=precision, f1=f1,
                         accuracy=accuracy, total_mistakes=cm.fp + cm.fn,
                         degenerate=degenerate)


def jsd(p, q) -> float:
    """Jensen-Shannon divergence (natural log) between two discrete
    densities on a shared grid; both are renormalized first. Symmetric,
    zero iff equal, at most log 2 (disjoint supports)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("grids do not match")
    if (p < 0).any() or (q < 0).any():
        raise ValueError("densities must be nonnegative")
    ps, qs = p.sum(), q.sum()
    if ps == 0.0 or qs == 0.0:
        raise ValueError("cannot normalize an all-zero density")
    p, q = p / ps, q / qs
    m = 0.5 * (p + q)

    def kl(a, b):
        mask = a > 0
        return float(np.sum(a[mask] * np.log(a[mask] / b[mask])))

    val = 0.5 * kl(p, m) + 0.5 * kl(q, m)
    return min(val, math.log(2.0))
