"""Classification metrics for the evaluation harness.

Macro-averaged F1 is implemented directly from counts rather than
imported, so the harness has no model-library dependency and the
edge-case policy (absent classes score zero) is pinned here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class F1Report:
    """Per-class precision/recall/F1 plus the macro average.

    Arrays are indexed by class id. A class with no predicted and no
    true instances gets precision = recall = F1 = 0, and still counts
    toward the macro mean; the same convention applies to the usual
    0/0 cases within precision and recall.
    """

    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())


def f1_report(y_true, y_pred, n_classes: int | None = None) -> F1Report:
    """Count-based multiclass F1 breakdown.

    Labels must be integers in [0, n_classes); n_classes defaults to
    1 + max(label) over both arrays.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError(
            f"label arrays must be equal-length 1-D, got {y_true.shape} and {y_pred.shape}"
        )
    if y_true.size == 0:
        raise ValueError("cannot score an empty label array")
    y_true = y_true.astype(np.int64)
    y_pred = y_pred.astype(np.int64)
    if y_true.min() < 0 or y_pred.min() < 0:
        raise ValueError("labels must be non-negative integers")
    observed = int(max(y_true.max(), y_pred.max())) + 1
    if n_classes is None:
        n_classes = observed
    elif observed > n_classes:
        raise ValueError(f"labels reach {observed - 1} but n_classes is {n_classes}")

    tp = np.zeros(n_classes)
    fp = np.zeros(n_classes)
    fn = np.zeros(n_classes)
    for c in range(n_classes):
        tp[c] = np.count_nonzero((y_pred == c) & (y_true == c))
        fp[c] = np.count_nonzero((y_pred == c) & (y_true != c))
        fn[c] = np.count_nonzero((y_pred != c) & (y_true == c))

    with np.errstate(invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        recall = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2.0 * precision * recall / np.maximum(denom, 1e-300), 0.0)
    support = np.array([np.count_nonzero(y_true == c) for c in range(n_classes)])
    return F1Report(precision=precision, recall=recall, f1=f1, support=support)


def macro_f1(y_true, y_pred, n_classes: int | None = None) -> float:
    """Unweighted mean of per-class F1 scores."""
    return f1_report(y_true, y_pred, n_classes=n_classes).macro_f1
