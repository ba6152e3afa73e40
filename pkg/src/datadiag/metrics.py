"""Confusion-matrix metrics, ROC and AUC.

``None`` stands for an Undefined metric (a 0/0 ratio) and is serialized as
JSON ``null``; it is never replaced by 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

METRIC_NAMES = ("acc", "sensitivity", "specificity", "precision", "f1", "g_mean", "auc", "phi", "tpr", "fpr")


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise MetricError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


def _check_scored(scores, truth) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float).reshape(-1)
    t = np.asarray(truth).reshape(-1).astype(int)
    if s.shape != t.shape:
        raise MetricError("scores and truth must have the same length")
    if not np.isin(t, (0, 1)).all():
        raise MetricError("truth labels must be 0/1")
    return s, t


def confusion(scores, truth, threshold: float = 0.5) -> ConfusionMatrix:
    """Score >= threshold counts as a Positive prediction."""
    s, t = _check_scored(scores, truth)
    pred = s >= threshold
    pos = t == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & pos)),
        fn=int(np.sum(~pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
    )


def _div(a: float, b: float) -> float | None:
    return a / b if b > 0 else None


def accuracy(c: ConfusionMatrix) -> float | None:
    return _div(c.tp + c.tn, c.total)


def sensitivity(c: ConfusionMatrix) -> float | None:
    return _div(c.tp, c.tp + c.fn)


def specificity(c: ConfusionMatrix) -> float | None:
    return _div(c.tn, c.tn + c.fp)


def precision(c: ConfusionMatrix) -> float | None:
    return _div(c.tp, c.tp + c.fp)


def fpr(c: ConfusionMatrix) -> float | None:
    return _div(c.fp, c.fp + c.tn)


def f1(c: ConfusionMatrix) -> float | None:
    p, r = precision(c), sensitivity(c)
    if p is None or r is None or p + r == 0:
        return None
    return 2 * p * r / (p + r)


def g_mean(c: ConfusionMatrix) -> float | None:
    a, b = sensitivity(c), specificity(c)
    if a is None or b is None:
        return None
    return math.sqrt(a * b)


def phi(c: ConfusionMatrix) -> float | None:
    den = (c.tp + c.fp) * (c.fn + c.tn) * (c.tp + c.fn) * (c.fp + c.tn)
    if den == 0:
        return None
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(den)


def auc(scores, truth) -> float:
    """Probability a random Positive outscores a random Negative (ties count 1/2).

    Computed from mid-ranks, which equals the pairwise count exactly.
    """
    s, t = _check_scored(scores, truth)
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes")
    r = rankdata(s)
    return float((r[t == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_pairwise(scores, truth) -> float:
    """Direct pairwise form; O(P*N), used as a reference."""
    s, t = _check_scored(scores, truth)
    p, n = s[t == 1], s[t == 0]
    if p.size == 0 or n.size == 0:
        raise MetricError("AUC needs both classes")
    diff = p[:, None] - n[None, :]
    return float((np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / (p.size * n.size))


def roc_curve(scores, truth) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds), one point per distinct score plus the origin."""
    s, t = _check_scored(scores, truth)
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s, t = s[order], t[order]
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(t)[last]
    fp = (last + 1) - tp
    return np.r_[0.0, fp / n_neg], np.r_[0.0, tp / n_pos], np.r_[np.inf, s[last]]


def auc_trapezoid(scores, truth) -> float:
    x, y, _ = roc_curve(scores, truth)
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


@dataclass(frozen=True)
class MetricSet:
    acc: float | None
    sensitivity: float | None
    specificity: float | None
    precision: float | None
    f1: float | None
    g_mean: float | None
    auc: float | None
    phi: float | None
    tpr: float | None
    fpr: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def basic_metrics(c: ConfusionMatrix) -> dict[str, float | None]:
    return {
        "acc": accuracy(c),
        "sensitivity": sensitivity(c),
        "specificity": specificity(c),
        "precision": precision(c),
        "tpr": sensitivity(c),
        "fpr": fpr(c),
    }


def metric_set(scores, truth, threshold: float = 0.5) -> MetricSet:
    """All metrics for one set of scored predictions (AUC Undefined for a one-class set)."""
    s, t = _check_scored(scores, truth)
    c = confusion(s, t, threshold)
    a = auc(s, t) if 0 < t.sum() < t.size else None
    return MetricSet(f1=f1(c), g_mean=g_mean(c), auc=a, phi=phi(c), **basic_metrics(c))
