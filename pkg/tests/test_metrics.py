import math

import numpy as np
import pytest

from datadiag.metrics import (
    ConfusionMatrix,
    MetricError,
    accuracy,
    auc,
    auc_pairwise,
    basic_metrics,
    confusion,
    f1,
    g_mean,
    metric_set,
    phi,
    precision,
    roc_curve,
    sensitivity,
    specificity,
)


def test_confusion_examples():
    c = confusion([0.9, 0.4, 0.6, 0.1], [1, 1, 0, 0])
    assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)
    c = confusion([1, 1, 0, 0], [1, 1, 0, 0])
    assert c.fn == 0 and c.fp == 0
    c = confusion([0, 0, 0], [1, 0, 1])
    assert (c.tp, c.fp, c.fn) == (0, 0, 2)
    assert confusion([0.5], [1]).tp == 1  # threshold is inclusive


def test_basic_metric_examples():
    c = ConfusionMatrix(tp=3, fn=1, fp=2, tn=4)
    m = basic_metrics(c)
    assert abs(m["acc"] - 0.7) < 1e-12
    assert m["sensitivity"] == 0.75 and abs(m["specificity"] - 2 / 3) < 1e-15
    assert m["precision"] == 0.6 and m["fpr"] == 2 / 6
    assert abs(f1(c) - 2 / 3) < 1e-12
    assert all(v == 1.0 for k, v in basic_metrics(ConfusionMatrix(50, 0, 0, 50)).items() if k != "fpr")


def test_undefined_is_none():
    c = ConfusionMatrix(0, 0, 3, 4)
    assert sensitivity(c) is None and g_mean(c) is None and phi(c) is None
    assert precision(ConfusionMatrix(0, 3, 0, 4)) is None
    assert accuracy(ConfusionMatrix(0, 0, 0, 0)) is None
    assert f1(ConfusionMatrix(5, 0, 0, 0)) == 1.0
    with pytest.raises(MetricError):
        ConfusionMatrix(-1, 0, 0, 0)


def test_f1_and_gmean_cases():
    assert f1(ConfusionMatrix(10, 0, 0, 5)) == 1.0
    assert g_mean(ConfusionMatrix(8, 2, 1, 9)) == pytest.approx(math.sqrt(0.72), abs=1e-12)
    # precision 1, sensitivity 0 cannot occur with tp = 0; F1 is undefined there
    assert f1(ConfusionMatrix(0, 5, 0, 5)) is None
    assert specificity(ConfusionMatrix(1, 1, 0, 3)) == 1.0


def test_auc_examples():
    assert auc([0.9, 0.8, 0.7, 0.85], [1, 1, 0, 0]) == 0.75
    assert auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc([0.3] * 6, [1, 0, 1, 0, 0, 1]) == 0.5
    with pytest.raises(MetricError):
        auc([0.1, 0.2], [1, 1])


def test_auc_monotone_invariance():
    rng = np.random.default_rng(0)
    s = rng.normal(size=60)
    y = rng.integers(0, 2, 60)
    assert auc(s, y) == auc(np.exp(3 * s) + 1, y)
    assert abs(auc(s, y) - auc_pairwise(s, y)) < 1e-12


def test_roc_endpoints():
    fpr, tpr, thr = roc_curve([0.9, 0.5, 0.5, 0.1], [1, 0, 1, 0])
    assert fpr[0] == 0 and tpr[0] == 0 and fpr[-1] == 1 and tpr[-1] == 1
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
    assert len(thr) == 4  # origin plus 3 distinct scores


def test_metric_set_one_class():
    m = metric_set([0.2, 0.7], [1, 1])
    assert m.auc is None and m.sensitivity == 0.5 and m.specificity is None
    m = metric_set([0.9, 0.8, 0.2], [1, 1, 0])
    assert m.auc == 1.0 and m.phi == 1.0
