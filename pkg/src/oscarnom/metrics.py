"""Imbalance-aware evaluation: ranking metrics, per-class F1, threshold
tuning, and ROC / precision-recall curve points.

ROC-AUC uses the rank statistic with midrank tie handling; PR-AUC is
step-wise average precision over descending unique score cut points (no
interpolation), the conservative choice for rare-positive problems.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, NoPositives, SingleClass

THRESHOLD_GRID = np.round(np.linspace(0.05, 0.95, 91), 2)


def _scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    l = np.asarray(labels).ravel().astype(np.int64)
    if s.shape[0] != l.shape[0]:
        raise LengthMismatch(f"{s.shape[0]} scores vs {l.shape[0]} labels")
    return s, l


def _midranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks; tied scores share the mean of their rank range."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC: (sum of positive ranks - n_pos(n_pos+1)/2) /
    (n_pos * n_neg)."""
    s, l = _scores_labels(scores, labels)
    n_pos = int((l == 1).sum())
    n_neg = int((l == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC-AUC needs both classes")
    ranks = _midranks(s)
    r_pos = float(ranks[l == 1].sum())
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _cut_point_counts(scores: np.ndarray, labels: np.ndarray):
    """Cumulative tp/fp after each group of tied scores, descending."""
    order = np.argsort(-scores, kind="mergesort")
    s_sorted = scores[order]
    l_sorted = labels[order]
    # last index of each tied group
    boundary = np.nonzero(np.diff(s_sorted))[0]
    last = np.concatenate([boundary, [len(s_sorted) - 1]])
    tp = np.cumsum(l_sorted == 1)[last].astype(np.float64)
    fp = np.cumsum(l_sorted == 0)[last].astype(np.float64)
    return s_sorted[last], tp, fp


def average_precision(scores, labels) -> float:
    """Step-wise AP: sum over cut points of (recall increment) * precision,
    with ties grouped at a single cut point."""
    s, l = _scores_labels(scores, labels)
    n_pos = int((l == 1).sum())
    if n_pos == 0:
        raise NoPositives("average precision needs at least one positive")
    _, tp, fp = _cut_point_counts(s, l)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(((recall - prev_recall) * precision).sum())


@dataclass
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def f1_scores(predictions, labels):
    """Per-class F1, macro-F1, accuracy and confusion counts.

    A class with zero F1 denominator scores 0 (warned when its support is
    empty).
    """
    p, l = _scores_labels(predictions, labels)
    p = p.astype(np.int64)
    conf = Confusion(tp=int(((p == 1) & (l == 1)).sum()),
                     fp=int(((p == 1) & (l == 0)).sum()),
                     tn=int(((p == 0) & (l == 0)).sum()),
                     fn=int(((p == 0) & (l == 1)).sum()))

    def _f1(tp, fp, fn, support, name):
        if support == 0:
            warnings.warn(f"class {name} has no true members; F1 set to 0",
                          RuntimeWarning, stacklevel=3)
        denom = 2 * tp + fp + fn
        return 2 * tp / denom if denom else 0.0

    total = len(l)
    f1_pos = _f1(conf.tp, conf.fp, conf.fn, conf.tp + conf.fn, "positive")
    f1_neg = _f1(conf.tn, conf.fn, conf.fp, conf.tn + conf.fp, "negative")
    macro = 0.5 * (f1_pos + f1_neg)
    accuracy = (conf.tp + conf.tn) / total if total else 0.0
    return f1_pos, f1_neg, macro, accuracy, conf


@dataclass
class ThresholdScan:
    grid: list[float]
    f1: list[float]
    tau_star: float

    @property
    def best_f1(self) -> float:
        return max(self.f1)


def tune_threshold(val_scores, val_labels) -> ThresholdScan:
    """Scan thresholds 0.05..0.95 (step 0.01) for the best positive-class
    F1 on validation scores; ties resolve to the lowest threshold."""
    s, l = _scores_labels(val_scores, val_labels)
    if len(np.unique(l)) < 2:
        raise SingleClass("threshold tuning needs both classes")
    f1_values = []
    for tau in THRESHOLD_GRID:
        preds = (s >= tau).astype(np.int64)
        f1_pos, _, _, _, _ = f1_scores(preds, l)
        f1_values.append(f1_pos)
    best = int(np.argmax(f1_values))  # argmax returns the first maximum
    return ThresholdScan(grid=[float(t) for t in THRESHOLD_GRID],
                         f1=f1_values, tau_star=float(THRESHOLD_GRID[best]))


def roc_curve_points(scores, labels) -> list[tuple[float, float]]:
    """(FPR, TPR) staircase from (0,0) to (1,1), one step per cut point."""
    s, l = _scores_labels(scores, labels)
    n_pos = int((l == 1).sum())
    n_neg = int((l == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC curve needs both classes")
    _, tp, fp = _cut_point_counts(s, l)
    points = [(0.0, 0.0)]
    points.extend((float(f / n_neg), float(t / n_pos)) for f, t in zip(fp, tp))
    return points


def pr_curve_points(scores, labels) -> list[tuple[float, float]]:
    """(recall, precision) points per cut point, anchored at recall 0."""
    s, l = _scores_labels(scores, labels)
    n_pos = int((l == 1).sum())
    if n_pos == 0:
        raise NoPositives("PR curve needs at least one positive")
    _, tp, fp = _cut_point_counts(s, l)
    points = [(0.0, 1.0)]
    points.extend((float(t / n_pos), float(t / (t + f))) for t, f in zip(tp, fp))
    return points


@dataclass
class EvalReport:
    variant: str
    accuracy: float
    roc_auc: float
    pr_auc: float
    f1_pos: float
    f1_neg: float
    macro_f1: float
    threshold: float
    confusion: Confusion
    roc_points: list[tuple[float, float]] = field(default_factory=list)
    pr_points: list[tuple[float, float]] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "metrics": {
                "accuracy": self.accuracy,
                "roc_auc": self.roc_auc,
                "pr_auc": self.pr_auc,
                "f1_pos": self.f1_pos,
                "f1_neg": self.f1_neg,
                "macro_f1": self.macro_f1,
            },
            "threshold": self.threshold,
            "confusion": self.confusion.to_dict(),
            "roc_points": [[x, y] for x, y in self.roc_points],
            "pr_points": [[x, y] for x, y in self.pr_points],
            "provenance": self.provenance,
        }


def evaluate_scores(variant: str, scores, labels, threshold: float,
                    provenance: dict | None = None) -> EvalReport:
    """Full test-set report at a threshold fixed beforehand."""
    s, l = _scores_labels(scores, labels)
    preds = (s >= threshold).astype(np.int64)
    f1_pos, f1_neg, macro, accuracy, conf = f1_scores(preds, l)
    return EvalReport(
        variant=variant,
        accuracy=accuracy,
        roc_auc=roc_auc(s, l),
        pr_auc=average_precision(s, l),
        f1_pos=f1_pos,
        f1_neg=f1_neg,
        macro_f1=macro,
        threshold=threshold,
        confusion=conf,
        roc_points=roc_curve_points(s, l),
        pr_points=pr_curve_points(s, l),
        provenance=provenance or {},
    )
