"""ROC curves, confusion metrics and stratified cross-validation."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import MetricError, StratificationError


@dataclass(frozen=True)
class RocCurve:
    """Operating points (false_alarm, detection, threshold) ordered by
    ascending false-alarm rate, plus the trapezoidal area."""

    false_alarm: np.ndarray
    detection: np.ndarray
    thresholds: np.ndarray
    auc: float

    def points(self):
        return list(zip(self.false_alarm, self.detection, self.thresholds))


def roc_curve(scores, labels) -> RocCurve:
    """Sweep thresholds over the distinct scores (classify score > t as +1).

    Thresholds sit halfway between neighboring distinct scores, with +inf
    and -inf closing the (0,0) and (1,1) endpoints. The trapezoidal area
    equals the pairwise ranking statistic, tied positive/negative pairs
    counting one half.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise MetricError("scores and labels must be equal-length vectors")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == -1).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("both classes must be present to form a ROC curve")

    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    y_sorted = labels[order]
    tp = np.cumsum(y_sorted == 1)
    fp = np.cumsum(y_sorted == -1)
    # one operating point per distinct score (the last row of each group);
    # the final group is the all-positive corner (1,1), added explicitly
    last_of_group = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tp = tp[last_of_group][:-1]
    fp = fp[last_of_group][:-1]
    distinct = s_sorted[last_of_group]
    mids = np.r_[np.inf, (distinct[:-1] + distinct[1:]) / 2.0, -np.inf]
    far = np.r_[0.0, fp / n_neg, 1.0]
    dr = np.r_[0.0, tp / n_pos, 1.0]
    # fp is non-decreasing; duplicates in far are fine for the trapezoid
    auc = float(np.trapezoid(dr, far))
    return RocCurve(false_alarm=far, detection=dr, thresholds=mids, auc=auc)


def save_roc_csv(curve: RocCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "false_alarm_rate", "detection_rate"])
        for far, dr, t in zip(curve.false_alarm, curve.detection, curve.thresholds):
            writer.writerow([repr(float(t)), repr(float(far)), repr(float(dr))])


@dataclass(frozen=True)
class ConfusionMetrics:
    tp: int
    fp: int
    tn: int
    fn: int
    detection_rate: float
    false_alarm_rate: float
    precision: float
    specificity: float


def confusion_metrics(predictions, labels) -> ConfusionMetrics:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise MetricError("predictions and labels must have equal length")
    if not (((labels == 1).any()) and ((labels == -1).any())):
        raise MetricError("both classes must be present in the labels")
    tp = int(((predictions == 1) & (labels == 1)).sum())
    fp = int(((predictions == 1) & (labels == -1)).sum())
    tn = int(((predictions == -1) & (labels == -1)).sum())
    fn = int(((predictions == -1) & (labels == 1)).sum())
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    return ConfusionMetrics(
        tp=tp, fp=fp, tn=tn, fn=fn,
        detection_rate=tp / (tp + fn),
        false_alarm_rate=fp / (fp + tn),
        precision=precision,
        specificity=tn / (tn + fp),
    )


def stratified_fold_ids(labels, folds: int, seed: int) -> np.ndarray:
    """Deal each class round-robin into `folds` folds after a seeded shuffle."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=np.int64)
    for cls in (1, -1):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        fold_of[idx] = np.arange(len(idx)) % folds
    for f in range(folds):
        val = fold_of == f
        for part, name in ((val, "validation"), (~val, "training")):
            if not ((labels[part] == 1).any() and (labels[part] == -1).any()):
                raise StratificationError(
                    f"fold {f}: {name} side is missing a class; "
                    f"reduce folds or rebalance the data")
    return fold_of


@dataclass(frozen=True)
class CvCell:
    params: dict
    mean_score: float
    fold_scores: tuple[float, ...]


@dataclass(frozen=True)
class CrossValResult:
    best_params: dict
    cells: tuple[CvCell, ...]


def cross_validate(trainer, data, grid: dict, folds: int = 5,
                   metric: str = "auc", seed: int = 0) -> CrossValResult:
    """Pick the grid cell with the best mean validation AUC.

    `trainer(train_subset, **cell)` must return a scorer mapping an
    evaluation subset to one score per row. `data` needs .labels and
    .take(indices) (Dataset and QuantizedDataset both qualify). Cells are
    visited in grid order (itertools.product over the dict's lists) and
    ties keep the earliest cell.
    """
    if metric != "auc":
        raise ValueError(f"unsupported metric {metric!r}")
    if folds < 2:
        raise ValueError("need at least 2 folds")
    keys = list(grid.keys())
    cells_params = [dict(zip(keys, combo))
                    for combo in itertools.product(*(grid[k] for k in keys))]
    if not cells_params:
        raise ValueError("empty parameter grid")
    fold_of = stratified_fold_ids(data.labels, folds, seed)

    cells = []
    best = None
    for params in cells_params:
        fold_scores = []
        for f in range(folds):
            train_idx = np.flatnonzero(fold_of != f)
            val_idx = np.flatnonzero(fold_of == f)
            scorer = trainer(data.take(train_idx), **params)
            scores = np.asarray(scorer(data.take(val_idx)), dtype=float)
            fold_scores.append(roc_curve(scores, data.labels[val_idx]).auc)
        cell = CvCell(params=params, mean_score=float(np.mean(fold_scores)),
                      fold_scores=tuple(fold_scores))
        cells.append(cell)
        if best is None or cell.mean_score > best.mean_score:
            best = cell
    return CrossValResult(best_params=best.params, cells=tuple(cells))
