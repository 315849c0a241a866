"""Datasets: CSV ingestion, imputation, splitting, time-block features,
standardization and quantization.

A Dataset is immutable once built (its arrays are marked read-only), so it
can be shared freely across workers. Labels are always +1/-1; files using
0/1 are mapped on ingestion (0 -> -1).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (ConfigError, ImputationError, LeakageError, ParseError,
                     SchemaError)

MISSING_TOKENS = {"", "na", "nan", "null", "none"}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with +1/-1 labels and a record of originally
    missing cells."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    missing_mask: np.ndarray

    def __post_init__(self):
        features = _frozen(np.asarray(self.features, dtype=float))
        labels = _frozen(np.asarray(self.labels, dtype=np.int64))
        mask = _frozen(np.asarray(self.missing_mask, dtype=bool))
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "missing_mask", mask)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        n, d = features.shape
        if n < 1 or d < 1:
            raise SchemaError("dataset must have at least one row and one feature")
        if labels.shape != (n,):
            raise SchemaError("labels length does not match feature rows")
        if mask.shape != (n, d):
            raise SchemaError("missing mask shape does not match features")
        if len(self.feature_names) != d:
            raise SchemaError("feature name count does not match columns")
        if len(set(self.feature_names)) != d:
            raise SchemaError("feature names must be unique")
        bad = set(np.unique(labels)) - {-1, 1}
        if bad:
            raise SchemaError(f"labels must be +1/-1, found {sorted(bad)}")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.labels[idx],
                       self.feature_names, self.missing_mask[idx])

    def positives(self) -> np.ndarray:
        return self.features[self.labels == 1]

    def negatives(self) -> np.ndarray:
        return self.features[self.labels == -1]


@dataclass(frozen=True)
class FactorRecord:
    """One raw record: a factor observed in some calendar year."""

    factor_id: str
    year: int
    value: float


def load_csv(path, label_column: str) -> Dataset:
    """Read a header-ed CSV into a Dataset.

    Empty cells, "NA" and non-numeric feature cells count as missing and
    are recorded in the mask (values stay NaN until impute_missing runs).
    Label values may be +1/-1 or 1/0; 0 maps to -1.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise SchemaError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != label_idx]
        rows, labels, mask = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(header)} cells, found {len(row)}")
            raw_label = row[label_idx].strip()
            try:
                lab = float(raw_label)
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: non-numeric label {raw_label!r}") from None
            labels.append(lab)
            vals, miss = [], []
            for i, cell in enumerate(row):
                if i == label_idx:
                    continue
                cell = cell.strip()
                if cell.lower() in MISSING_TOKENS:
                    vals.append(np.nan)
                    miss.append(True)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    v = np.nan
                if not math.isfinite(v):
                    vals.append(np.nan)
                    miss.append(True)
                else:
                    vals.append(v)
                    miss.append(False)
            rows.append(vals)
            mask.append(miss)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    labels = np.asarray(labels)
    lab_set = set(np.unique(labels))
    if lab_set <= {-1.0, 1.0}:
        y = labels.astype(np.int64)
    elif lab_set <= {0.0, 1.0}:
        y = np.where(labels == 0, -1, 1).astype(np.int64)
    else:
        raise SchemaError(
            f"{path}: label column must use +1/-1 or 1/0, found {sorted(lab_set)}")
    return Dataset(np.asarray(rows, dtype=float), y, tuple(names),
                   np.asarray(mask, dtype=bool))


def load_features_csv(path, exclude=()) -> tuple[np.ndarray, tuple[str, ...]]:
    """Read only the feature columns of a CSV (no label validation).

    Missing or non-numeric cells come back as NaN. Columns named in
    `exclude` are dropped when present.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        keep = [i for i, h in enumerate(header) if h not in set(exclude)]
        names = tuple(header[i] for i in keep)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(header)} cells, found {len(row)}")
            vals = []
            for i in keep:
                cell = row[i].strip()
                if cell.lower() in MISSING_TOKENS:
                    vals.append(np.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    v = np.nan
                vals.append(v if math.isfinite(v) else np.nan)
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float), names


def save_csv(dataset: Dataset, path, label_column: str = "label") -> None:
    """Write a Dataset in the same CSV dialect load_csv reads."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [label_column])
        for row, lab in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def column_means(d: Dataset) -> np.ndarray:
    """Mean of the observed (non-missing) cells per feature."""
    obs = ~d.missing_mask
    with np.errstate(invalid="ignore"):
        sums = np.where(obs, d.features, 0.0).sum(axis=0)
    counts = obs.sum(axis=0)
    means = np.full(d.n_features, np.nan)
    nonzero = counts > 0
    means[nonzero] = sums[nonzero] / counts[nonzero]
    return means


def impute_missing(d: Dataset, means: np.ndarray | None = None) -> Dataset:
    """Replace missing cells by per-feature means of the observed values.

    Pass `means` (e.g. training-split means) to impute a held-out set
    without touching its own statistics. Observed cells are untouched.
    """
    if means is None:
        means = column_means(d)
        needs = d.missing_mask.any(axis=0)
        dead = needs & ~np.isfinite(means)
        if dead.any():
            name = d.feature_names[int(np.flatnonzero(dead)[0])]
            raise ImputationError(f"feature {name!r} has no observed values to impute from")
    means = np.asarray(means, dtype=float)
    filled = np.where(d.missing_mask, means[None, :], d.features)
    if not np.isfinite(filled).all():
        bad = int(np.flatnonzero(~np.isfinite(filled).all(axis=0))[0])
        raise ImputationError(
            f"feature {d.feature_names[bad]!r} still non-finite after imputation")
    return replace(d, features=filled)


def split_train_test(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic random row partition into (train, test).

    The train side gets round(N * train_fraction) rows (half rounds up);
    fractions leaving either side empty are rejected.
    """
    n = d.n_rows
    n_train = int(math.floor(n * train_fraction + 0.5))
    if not (0 < train_fraction < 1) or n_train < 1 or n - n_train < 1:
        raise ValueError(
            f"train_fraction {train_fraction} leaves an empty side for N={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return d.take(np.sort(perm[:n_train])), d.take(np.sort(perm[n_train:]))


def summarize_time_blocks(records, factor_ids, target_year: int,
                          aggregate: str = "sum") -> np.ndarray:
    """Collapse per-year factor records into four features per factor.

    Blocks 1..3 sum the records one, two and three years before the target
    year; block 4 aggregates everything earlier (sum by default, mean with
    aggregate="mean"). Factors without records contribute zeros. Records
    for factors not listed are ignored.
    """
    if aggregate not in ("sum", "mean"):
        raise ValueError(f"aggregate must be 'sum' or 'mean', got {aggregate!r}")
    index = {fid: k for k, fid in enumerate(factor_ids)}
    sums = np.zeros((len(factor_ids), 4))
    earlier_counts = np.zeros(len(factor_ids))
    for rec in records:
        if rec.year >= target_year:
            raise LeakageError(
                f"record for {rec.factor_id!r} in year {rec.year} is not before "
                f"target year {target_year}")
        k = index.get(rec.factor_id)
        if k is None:
            continue
        age = target_year - rec.year
        if age <= 3:
            sums[k, age - 1] += rec.value
        else:
            sums[k, 3] += rec.value
            earlier_counts[k] += 1
    if aggregate == "mean":
        nz = earlier_counts > 0
        sums[nz, 3] /= earlier_counts[nz]
    return sums.reshape(-1)


def time_block_feature_names(factor_ids) -> list[str]:
    return [f"{fid}_{suffix}" for fid in factor_ids
            for suffix in ("y1", "y2", "y3", "earlier")]


@dataclass(frozen=True)
class Standardizer:
    """Column-wise zero-mean/unit-variance transform fitted on training data.

    Zero-variance columns are centered only.
    """

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, d: Dataset) -> Dataset:
        return replace(d, features=self.transform_matrix(d.features))

    def transform_matrix(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


def fit_standardizer(train: Dataset) -> Standardizer:
    mean = train.features.mean(axis=0)
    scale = train.features.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return Standardizer(mean=mean, scale=scale)


# --------------------------------------------------------------------------
# Quantization

VALID_RULES = ("passthrough", "fixed", "max_fraction", "indicator")


@dataclass(frozen=True)
class FeatureRule:
    """Quantization rule for one feature.

    fixed: ascending cut points; k cuts give k+1 levels, level(x) = number
    of cuts <= x (so each cut opens the next level).
    max_fraction: cuts are fractions of the training-split maximum of the
    feature; a nonpositive maximum collapses every value to level 0.
    indicator: level 1 when the value is > 0, else 0.
    passthrough: values are already small nonnegative integer levels.
    """

    rule: str
    cuts: tuple[float, ...] = ()
    fractions: tuple[float, ...] = ()

    def __post_init__(self):
        if self.rule not in VALID_RULES:
            raise ConfigError(f"unknown quantization rule {self.rule!r}")
        if self.rule == "fixed":
            if not self.cuts or any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
                raise ConfigError("fixed rule needs strictly ascending cut points")
        if self.rule == "max_fraction":
            fr = self.fractions
            if (not fr or any(not (0 < f < 1) for f in fr)
                    or any(b <= a for a, b in zip(fr, fr[1:]))):
                raise ConfigError(
                    "max_fraction rule needs strictly ascending fractions in (0,1)")


@dataclass(frozen=True)
class QuantizationScheme:
    """Per-feature rules plus an optional default for unlisted features."""

    per_feature: dict[str, FeatureRule] = field(default_factory=dict)
    default: FeatureRule | None = None

    def rule_for(self, name: str) -> FeatureRule:
        rule = self.per_feature.get(name, self.default)
        if rule is None:
            raise ConfigError(f"quantization scheme does not cover feature {name!r}")
        return rule


def paper_count_scheme() -> QuantizationScheme:
    """Default scheme for count-like features: seven levels at fractions of
    the per-feature training maximum."""
    return QuantizationScheme(default=FeatureRule(
        rule="max_fraction", fractions=(0.0001, 0.05, 0.10, 0.20, 0.40, 0.70)))


def load_quantization_config(path) -> QuantizationScheme:
    """Structured JSON config: {"features": {name: {"rule": ..., ...}}, "default": {...}}."""
    with open(path) as fh:
        raw = json.load(fh)
    def build(spec):
        return FeatureRule(rule=spec["rule"],
                           cuts=tuple(spec.get("cuts", ())),
                           fractions=tuple(spec.get("fractions", ())))
    per_feature = {name: build(spec) for name, spec in raw.get("features", {}).items()}
    default = build(raw["default"]) if "default" in raw else None
    return QuantizationScheme(per_feature=per_feature, default=default)


@dataclass(frozen=True)
class ResolvedQuantizer:
    """A scheme with all cut points materialized from a training split."""

    feature_names: tuple[str, ...]
    kinds: tuple[str, ...]
    cuts: tuple[tuple[float, ...], ...]
    level_counts: tuple[int, ...]

    def transform(self, d: Dataset) -> "QuantizedDataset":
        if d.feature_names != self.feature_names:
            raise SchemaError("dataset features do not match the fitted quantizer")
        levels = np.empty(d.features.shape, dtype=np.int64)
        for j, kind in enumerate(self.kinds):
            col = d.features[:, j]
            if kind == "indicator":
                levels[:, j] = (col > 0).astype(np.int64)
            elif kind == "passthrough":
                lv = np.rint(col).astype(np.int64)
                levels[:, j] = np.clip(lv, 0, self.level_counts[j] - 1)
            else:
                cuts = np.asarray(self.cuts[j])
                if cuts.size == 0:
                    levels[:, j] = 0
                else:
                    levels[:, j] = (col[:, None] >= cuts[None, :]).sum(axis=1)
        return QuantizedDataset(levels=levels, level_counts=self.level_counts,
                                labels=d.labels, feature_names=d.feature_names)

    def to_jsonable(self) -> dict:
        return {"feature_names": list(self.feature_names),
                "kinds": list(self.kinds),
                "cuts": [list(c) for c in self.cuts],
                "level_counts": list(self.level_counts)}

    @staticmethod
    def from_jsonable(obj) -> "ResolvedQuantizer":
        return ResolvedQuantizer(
            feature_names=tuple(obj["feature_names"]),
            kinds=tuple(obj["kinds"]),
            cuts=tuple(tuple(c) for c in obj["cuts"]),
            level_counts=tuple(int(k) for k in obj["level_counts"]))


def fit_quantizer(train: Dataset, scheme: QuantizationScheme) -> ResolvedQuantizer:
    kinds, cuts, counts = [], [], []
    for j, name in enumerate(train.feature_names):
        rule = scheme.rule_for(name)
        col = train.features[:, j]
        if rule.rule == "fixed":
            kinds.append("cuts")
            cuts.append(tuple(rule.cuts))
            counts.append(len(rule.cuts) + 1)
        elif rule.rule == "max_fraction":
            mx = float(col.max())
            kinds.append("cuts")
            if mx <= 0:
                cuts.append(())  # degenerate column, everything maps to level 0
            else:
                cuts.append(tuple(f * mx for f in rule.fractions))
            counts.append(len(rule.fractions) + 1)
        elif rule.rule == "indicator":
            kinds.append("indicator")
            cuts.append(())
            counts.append(2)
        else:  # passthrough
            rounded = np.rint(col)
            if np.abs(col - rounded).max() > 1e-9 or rounded.min() < 0:
                raise ConfigError(
                    f"passthrough feature {name!r} must hold small nonnegative integers")
            kinds.append("passthrough")
            cuts.append(())
            counts.append(int(rounded.max()) + 1)
    return ResolvedQuantizer(feature_names=train.feature_names, kinds=tuple(kinds),
                             cuts=tuple(cuts), level_counts=tuple(counts))


def quantize(d: Dataset, q) -> "QuantizedDataset":
    """Quantize a dataset.

    `q` may be a QuantizationScheme (cut points are then derived from `d`
    itself, the training-split path) or an already fitted ResolvedQuantizer
    (the held-out path).
    """
    if isinstance(q, QuantizationScheme):
        q = fit_quantizer(d, q)
    return q.transform(d)


@dataclass(frozen=True)
class QuantizedDataset:
    """Integer feature levels; level j lives in [0, level_counts[j])."""

    levels: np.ndarray
    level_counts: tuple[int, ...]
    labels: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        levels = _frozen(np.asarray(self.levels, dtype=np.int64))
        labels = _frozen(np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "level_counts", tuple(int(k) for k in self.level_counts))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        counts = np.asarray(self.level_counts)
        if levels.shape[1] != counts.shape[0]:
            raise SchemaError("level_counts length does not match columns")
        if (levels < 0).any() or (levels >= counts[None, :]).any():
            raise SchemaError("levels out of range for their level_counts")

    @property
    def n_rows(self) -> int:
        return self.levels.shape[0]

    @property
    def n_features(self) -> int:
        return self.levels.shape[1]

    def take(self, indices) -> "QuantizedDataset":
        idx = np.asarray(indices, dtype=np.intp)
        return QuantizedDataset(self.levels[idx], self.level_counts,
                                self.labels[idx], self.feature_names)
