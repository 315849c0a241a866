"""Naive-Bayes likelihood ratio scoring over quantized features.

The full test multiplies per-feature likelihood ratios; the top-K variant
keeps only the K largest per-feature log-ratios, which both classifies and
explains each row by the handful of features that drove the call. A
single-feature variant yields a global feature-importance ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError

DEFAULT_SMOOTHING = 1.0
DEFAULT_K = 4


@dataclass(frozen=True)
class LrtModel:
    """Per-feature, per-class probability tables over quantized levels.

    tables[j] has shape (2, level_counts[j]); row 0 is the negative class,
    row 1 the positive class. Each row sums to 1.
    """

    tables: tuple[np.ndarray, ...]
    level_counts: tuple[int, ...]
    smoothing: float

    @property
    def n_features(self) -> int:
        return len(self.tables)

    def log_ratio_table(self, j: int) -> np.ndarray:
        """log p(level | +1) - log p(level | -1) for feature j.

        With zero smoothing an unseen level in one class gives +/-inf; a
        level unseen in both classes gives 0 (no evidence either way).
        """
        pos, neg = self.tables[j][1], self.tables[j][0]
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(pos) - np.log(neg)
        lr[np.isnan(lr)] = 0.0
        return lr

    def ratio_table(self, j: int) -> np.ndarray:
        """p(level | +1) / p(level | -1), with 0/0 treated as 1."""
        pos, neg = self.tables[j][1], self.tables[j][0]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = pos / neg
        r[np.isnan(r)] = 1.0
        return r


def fit_lrt(train, smoothing: float = DEFAULT_SMOOTHING) -> LrtModel:
    """Estimate the per-class level distributions from a QuantizedDataset.

    pmf[y][v] = (count(level=v, class=y) + smoothing)
                / (count(class=y) + smoothing * n_levels).
    """
    if smoothing < 0:
        raise ValueError(f"smoothing must be nonnegative, got {smoothing}")
    labels = np.asarray(train.labels)
    pos_rows = train.levels[labels == 1]
    neg_rows = train.levels[labels == -1]
    if len(pos_rows) == 0 or len(neg_rows) == 0:
        raise FitError("both classes must be present to fit the ratio tables")
    tables = []
    for j, n_levels in enumerate(train.level_counts):
        table = np.empty((2, n_levels))
        for row, cls_rows in ((0, neg_rows), (1, pos_rows)):
            counts = np.bincount(cls_rows[:, j], minlength=n_levels).astype(float)
            table[row] = (counts + smoothing) / (len(cls_rows) + smoothing * n_levels)
        tables.append(table)
    return LrtModel(tables=tuple(tables), level_counts=tuple(train.level_counts),
                    smoothing=float(smoothing))


def row_log_ratios(m: LrtModel, z) -> np.ndarray:
    """Per-feature log-ratios for one quantized row."""
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (m.n_features,):
        raise ValueError(f"row has {z.shape}, model expects {m.n_features} features")
    return np.array([m.log_ratio_table(j)[z[j]] for j in range(m.n_features)])


def score_klrt(m: LrtModel, z, K: int) -> tuple[float, list[int]]:
    """Sum of the K largest per-feature log-ratios and those feature ids.

    Ties are broken toward the lower feature index, so the selected set at
    K is always a prefix of the set at K+1.
    """
    if not 1 <= K <= m.n_features:
        raise ValueError(f"K must be in [1, {m.n_features}], got {K}")
    ratios = row_log_ratios(m, z)
    order = sorted(range(m.n_features), key=lambda j: (-ratios[j], j))
    top = order[:K]
    return float(ratios[top].sum()), top


def score_rows(m: LrtModel, data, K: int) -> np.ndarray:
    """Vectorized top-K scores for every row of a QuantizedDataset."""
    if not 1 <= K <= m.n_features:
        raise ValueError(f"K must be in [1, {m.n_features}], got {K}")
    ratios = np.column_stack([m.log_ratio_table(j)[data.levels[:, j]]
                              for j in range(m.n_features)])
    if K == m.n_features:
        return ratios.sum(axis=1)
    part = np.partition(ratios, m.n_features - K, axis=1)
    return part[:, m.n_features - K:].sum(axis=1)


def feature_importance(m: LrtModel, test) -> list[tuple[int, float]]:
    """Rank features by how often they top the single-feature test and by
    their mean likelihood ratio, both standardized across features.

    Returns (feature index, score) pairs sorted by descending score.
    """
    if test.n_rows == 0:
        raise ValueError("test data must be nonempty")
    ratios_log = np.column_stack([m.log_ratio_table(j)[test.levels[:, j]]
                                  for j in range(m.n_features)])
    ratios_raw = np.column_stack([m.ratio_table(j)[test.levels[:, j]]
                                  for j in range(m.n_features)])
    # rows where several features tie for the top share the selection count,
    # so statistically identical features score identically
    is_top = ratios_log == ratios_log.max(axis=1, keepdims=True)
    counts = (is_top / is_top.sum(axis=1, keepdims=True)).sum(axis=0)
    mean_ratio = ratios_raw.mean(axis=0)

    def standardize(v):
        sd = v.std()
        if sd == 0:
            return np.zeros_like(v)
        return (v - v.mean()) / sd

    score = 0.5 * (standardize(counts) + standardize(mean_ratio))
    order = sorted(range(m.n_features), key=lambda j: (-score[j], j))
    return [(j, float(score[j])) for j in order]
