"""Labeling quality metrics. All take flat label arrays (1-based classes)."""

from __future__ import annotations

import warnings

import numpy as np


class UndefinedMetricWarning(UserWarning):
    """Raised (as a warning) when a metric's definition degenerates to 0/0."""


def _flat(truth, pred):
    t = np.asarray(truth).ravel()
    p = np.asarray(pred).ravel()
    if t.shape != p.shape:
        raise ValueError(f"label arrays differ in length: {t.shape} vs {p.shape}")
    if t.size == 0:
        raise ValueError("empty label arrays")
    return t, p


def pixel_accuracy(truth, pred) -> float:
    """Fraction of nodes labeled correctly."""
    t, p = _flat(truth, pred)
    return float(np.mean(t == p))


def class_accuracy(truth, pred, cls: int) -> float:
    """Recall of one class: correct among nodes whose truth is cls. 0 with a
    warning when the class never occurs in the truth."""
    t, p = _flat(truth, pred)
    mask = t == cls
    if not mask.any():
        warnings.warn(f"class {cls} absent from truth; accuracy undefined, returning 0",
                      UndefinedMetricWarning, stacklevel=2)
        return 0.0
    return float(np.mean(p[mask] == cls))


def intersection_over_union(truth, pred, cls: int) -> float:
    """TP / (TP + FP + FN) for one class; 0 when the union is empty."""
    t, p = _flat(truth, pred)
    tp = int(np.sum((t == cls) & (p == cls)))
    union = int(np.sum((t == cls) | (p == cls)))
    if union == 0:
        warnings.warn(f"class {cls} absent from truth and prediction; IoU undefined, returning 0",
                      UndefinedMetricWarning, stacklevel=2)
        return 0.0
    return tp / union


def f_score(truth, pred, cls: int) -> float:
    """Harmonic mean of precision and recall for one class; 0 with a warning
    when precision + recall is 0 so batch evaluation never aborts."""
    t, p = _flat(truth, pred)
    tp = int(np.sum((t == cls) & (p == cls)))
    pred_pos = int(np.sum(p == cls))
    true_pos = int(np.sum(t == cls))
    precision = tp / pred_pos if pred_pos else 0.0
    recall = tp / true_pos if true_pos else 0.0
    if precision + recall == 0.0:
        warnings.warn(f"class {cls}: precision + recall is 0; F-score undefined, returning 0",
                      UndefinedMetricWarning, stacklevel=2)
        return 0.0
    return 2.0 * precision * recall / (precision + recall)
