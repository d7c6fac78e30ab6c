"""Confusion counts, precision/recall family and ROC analysis."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_labels(cls, truth, predicted) -> "ConfusionCounts":
        t = np.asarray(truth, dtype=bool)
        p = np.asarray(predicted, dtype=bool)
        return cls(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(t & ~p)),
                   int(np.sum(~t & ~p)))


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def prf_metrics(c: ConfusionCounts) -> dict[str, float | None]:
    """Standard detection metrics; a 0/0 ratio is reported as ``None``."""
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    return {
        "precision": precision,
        "recall": recall,
        "f1": _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        "accuracy": _ratio(c.tp + c.tn, c.total),
        "fpr": _ratio(c.fp, c.fp + c.tn),
        "fnr": _ratio(c.fn, c.fn + c.tp),
    }


def roc_curve(scores, labels) -> dict:
    """ROC by sweeping a ``score >= t`` rule over every distinct score.

    Points are ``(0, 0)``, one per distinct score from high to low, then
    ``(1, 1)``. Tied scores move together, so the trapezoidal AUC equals the
    pairwise probability with ties counted as one half, to the last bit.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both positive and negative labels")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    distinct = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tps = np.cumsum(y)[distinct]
    fps = np.cumsum(~y)[distinct]
    fpr = np.r_[0.0, fps / n_neg, 1.0]
    tpr = np.r_[0.0, tps / n_pos, 1.0]
    thresholds = np.r_[np.inf, s[distinct], -np.inf]
    # trapezoid on integer counts: twice the area is an integer, so one rounding
    fp_all = np.r_[0, fps, n_neg].astype(np.int64)
    tp_all = np.r_[0, tps, n_pos].astype(np.int64)
    twice = int(np.sum(np.diff(fp_all) * (tp_all[1:] + tp_all[:-1])))
    auc = twice / (2 * n_pos * n_neg)
    return {"fpr": fpr.tolist(), "tpr": tpr.tolist(), "thresholds": thresholds.tolist(),
            "auc": auc}
