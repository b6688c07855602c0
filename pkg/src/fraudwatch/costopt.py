"""Imbalance-aware evaluation metrics and cost-sensitive decision-threshold
optimization: a transaction is treated as fraud when its score is >= tau, the
expected cost of a threshold is c_fn * FN(tau) + c_fp * FP(tau), and tau* is
the grid argmin of that cost (optionally under a false-positive-rate ceiling)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, encode_dataset
from .models import EnsembleModel, ensemble_predict_batch


@dataclass(frozen=True)
class ScoredSet:
    """Parallel (score, label) arrays, order-preserving."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if self.scores.size == 0:
            raise ValueError("scored set needs at least one pair")
        if self.scores.size != self.labels.size:
            raise ValueError("scores and labels length mismatch")
        if np.any(self.scores < 0) or np.any(self.scores > 1):
            raise ValueError("scores must lie in [0, 1]")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ValueError("labels must be 0 or 1")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, int]]) -> "ScoredSet":
        scores = [s for s, _ in pairs]
        labels = [l for _, l in pairs]
        return cls(scores=np.array(scores), labels=np.array(labels))

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def n_negative(self) -> int:
        return int(self.labels.size - self.labels.sum())


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class CostParams:
    """Asymmetric misclassification costs; missed fraud defaults to 50x the
    cost of a false alarm. max_fpr, when set, caps the eligible thresholds."""

    c_fn: float = 50.0
    c_fp: float = 1.0
    max_fpr: Optional[float] = None

    def __post_init__(self):
        if self.c_fn <= 0 or self.c_fp <= 0:
            raise ValueError("costs must be positive")
        if self.max_fpr is not None and not 0.0 < self.max_fpr <= 1.0:
            raise ValueError("max_fpr must be in (0, 1]")


@dataclass(frozen=True)
class SweepRow:
    tau: float
    cm: ConfusionMatrix
    cost: float
    precision: float
    recall: float
    f1: float
    accuracy: float
    fpr: float


@dataclass(frozen=True)
class ThresholdSweep:
    rows: tuple[SweepRow, ...]
    chosen: float
    costs: CostParams

    def row_at(self, tau: float) -> SweepRow:
        for row in self.rows:
            if row.tau == tau:
                return row
        raise KeyError(f"tau {tau} not in sweep grid")

    @property
    def chosen_row(self) -> SweepRow:
        return self.row_at(self.chosen)


@dataclass(frozen=True)
class EvaluationReport:
    cm: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    fpr: float
    roc_auc: Optional[float]
    pr_auc: Optional[float]
    roc_points: Optional[tuple[tuple[float, float], ...]]
    pr_points: Optional[tuple[tuple[float, float], ...]]
    tau: float
    n_records: int
    flags: tuple[str, ...] = ()


def confusion_at(s: ScoredSet, tau: float) -> ConfusionMatrix:
    """Counts under the inclusive decision rule: predict fraud iff score >= tau."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    pred = s.scores >= tau
    pos = s.labels == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def expected_cost(cm: ConfusionMatrix, costs: CostParams) -> float:
    return costs.c_fn * cm.fn + costs.c_fp * cm.fp


def basic_metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float, float]:
    """(accuracy, precision, recall, f1, fpr); empty denominators yield 0."""
    accuracy = (cm.tp + cm.tn) / cm.total if cm.total else 0.0
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    fpr = cm.fp / (cm.fp + cm.tn) if cm.fp + cm.tn else 0.0
    return accuracy, precision, recall, f1, fpr


def candidate_grid(s: ScoredSet) -> np.ndarray:
    """Every distinct score plus {0.0, 0.5, 1.0}, ascending."""
    return np.unique(np.concatenate([s.scores, [0.0, 0.5, 1.0]]))


def threshold_sweep(s: ScoredSet, costs: CostParams,
                    grid: Optional[np.ndarray] = None) -> list[SweepRow]:
    """One SweepRow per candidate threshold, ascending by tau."""
    if grid is None:
        grid = candidate_grid(s)
    order = np.argsort(s.scores, kind="stable")
    sorted_scores = s.scores[order]
    sorted_pos = (s.labels[order] == 1).astype(np.int64)
    pos_prefix = np.concatenate([[0], np.cumsum(sorted_pos)])
    total_pos = int(pos_prefix[-1])
    total = s.scores.size

    rows = []
    below = np.searchsorted(sorted_scores, grid, side="left")
    for tau, k in zip(grid, below):
        fn = int(pos_prefix[k])          # positives scoring < tau
        tn = int(k - fn)
        tp = total_pos - fn
        fp = total - total_pos - tn
        cm = ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)
        accuracy, precision, recall, f1, fpr = basic_metrics(cm)
        rows.append(SweepRow(
            tau=float(tau), cm=cm, cost=expected_cost(cm, costs),
            precision=precision, recall=recall, f1=f1,
            accuracy=accuracy, fpr=fpr))
    return rows


def optimize_threshold(s: ScoredSet, costs: CostParams) -> ThresholdSweep:
    """Pick tau* minimizing expected cost over the candidate grid.

    Candidates violating max_fpr (when set) are ineligible; cost ties break
    toward higher recall, then lower tau.
    """
    if s.n_positive == 0 or s.n_negative == 0:
        raise ValueError("threshold optimization needs both classes present")
    rows = threshold_sweep(s, costs)

    best: Optional[SweepRow] = None
    for row in rows:
        if costs.max_fpr is not None and row.fpr > costs.max_fpr:
            continue
        if best is None:
            best = row
            continue
        key = (row.cost, -row.recall, row.tau)
        best_key = (best.cost, -best.recall, best.tau)
        if key < best_key:
            best = row
    if best is None:
        raise ValueError(
            f"no candidate threshold satisfies max_fpr={costs.max_fpr}")
    return ThresholdSweep(rows=tuple(rows), chosen=best.tau, costs=costs)


def roc_curve(s: ScoredSet) -> list[tuple[float, float]]:
    """(fpr, tpr) points sweeping distinct scores descending, ties grouped;
    endpoints (0,0) and (1,1) included."""
    if s.n_positive == 0 or s.n_negative == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-s.scores, kind="stable")
    scores = s.scores[order]
    pos = (s.labels[order] == 1).astype(np.int64)
    distinct = np.flatnonzero(np.concatenate([scores[:-1] != scores[1:], [True]]))
    tp = np.cumsum(pos)[distinct]
    fp = (distinct + 1) - tp
    points = [(0.0, 0.0)]
    points.extend((float(f) / s.n_negative, float(t) / s.n_positive)
                  for f, t in zip(fp, tp))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return points


def roc_auc(s: ScoredSet) -> float:
    """Trapezoidal area under the ROC curve; equals the pairwise statistic
    P(score+ > score-) + 0.5 P(tie)."""
    points = roc_curve(s)
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y1 + y0) / 2.0
    return area


def pr_curve(s: ScoredSet) -> list[tuple[float, float]]:
    """(recall, precision) points at each distinct score threshold, descending."""
    if s.n_positive == 0:
        raise ValueError("PR curve needs at least one positive")
    order = np.argsort(-s.scores, kind="stable")
    scores = s.scores[order]
    pos = (s.labels[order] == 1).astype(np.int64)
    distinct = np.flatnonzero(np.concatenate([scores[:-1] != scores[1:], [True]]))
    tp = np.cumsum(pos)[distinct]
    pp = distinct + 1
    return [(float(t) / s.n_positive, float(t) / float(p))
            for t, p in zip(tp, pp)]


def pr_auc(s: ScoredSet) -> float:
    """Average precision: sum of (r_i - r_{i-1}) * p_i over curve points."""
    points = pr_curve(s)
    area = 0.0
    prev_r = 0.0
    for r, p in points:
        area += (r - prev_r) * p
        prev_r = r
    return area


def score_dataset(model: EnsembleModel, ds: Dataset) -> ScoredSet:
    """Encode through the model's codec and score every record."""
    if not ds.labeled:
        raise ValueError("scoring for evaluation requires labeled data")
    X = encode_dataset(model.codec, ds)
    scores = np.clip(ensemble_predict_batch(model, X), 0.0, 1.0)
    return ScoredSet(scores=scores, labels=ds.labels())


def evaluate_scores(s: ScoredSet, tau: float) -> EvaluationReport:
    """Assemble the full report for an already-scored set."""
    cm = confusion_at(s, tau)
    accuracy, precision, recall, f1, fpr = basic_metrics(cm)
    flags = []
    if cm.tp + cm.fp == 0:
        flags.append("precision denominator empty, reported 0")
    if cm.fp + cm.tn == 0:
        flags.append("fpr denominator empty, reported 0")
    if s.n_positive and s.n_negative:
        roc_pts, auc = tuple(roc_curve(s)), roc_auc(s)
    else:
        roc_pts, auc = None, None
        flags.append("single class present, roc omitted")
    if s.n_positive:
        pr_pts, ap = tuple(pr_curve(s)), pr_auc(s)
    else:
        pr_pts, ap = None, None
        flags.append("no positives, pr omitted")
    return EvaluationReport(
        cm=cm, accuracy=accuracy, precision=precision, recall=recall, f1=f1,
        fpr=fpr, roc_auc=auc, pr_auc=ap, roc_points=roc_pts, pr_points=pr_pts,
        tau=tau, n_records=int(s.scores.size), flags=tuple(flags))


def evaluate(model: EnsembleModel, test: Dataset, tau: float) -> EvaluationReport:
    """Score a labeled test partition via the model's codec and report all
    metrics and curves at the operating threshold."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    return evaluate_scores(score_dataset(model, test), tau)
