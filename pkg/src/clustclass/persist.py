"""Model archives: a single JSON document per trained model.

The document is self-describing (schema version, model kind, payload,
preprocessing metadata) and uses Python's shortest-round-trip float
representation, so a save/load cycle reproduces predictions bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .acc import AccModel, acc_assign, acc_scores
from .data import ResolvedQuantizer, Standardizer
from .errors import SchemaError
from .klrt import LrtModel, score_rows
from .logreg import LogisticModel
from .svm import LinearModel, decision_values

SCHEMA_VERSION = 1

LINEAR_KINDS = ("slsvm", "lsvm", "logreg")
CLUSTERED_KINDS = ("acc", "ct_slsvm", "ct_lsvm")
ALL_KINDS = LINEAR_KINDS + ("klrt",) + CLUSTERED_KINDS


@dataclass
class ModelArchive:
    kind: str
    payload: dict
    feature_names: tuple[str, ...]
    imputation_means: np.ndarray
    standardizer: Standardizer | None
    quantizer: ResolvedQuantizer | None
    training_config: dict
    library_version: str = __version__

    def model(self):
        """Rebuild the in-memory model object for this archive."""
        p = self.payload
        if self.kind in ("slsvm", "lsvm"):
            return LinearModel(beta=np.asarray(p["beta"], float), beta0=float(p["beta0"]))
        if self.kind == "logreg":
            return LogisticModel(theta=np.asarray(p["theta"], float),
                                 theta0=float(p["theta0"]), lam=float(p["lambda"]))
        if self.kind == "klrt":
            tables = tuple(np.asarray(t, float) for t in p["tables"])
            return LrtModel(tables=tables, level_counts=tuple(p["level_counts"]),
                            smoothing=float(p["smoothing"]))
        if self.kind in CLUSTERED_KINDS:
            models = tuple(LinearModel(beta=np.asarray(m["beta"], float),
                                       beta0=float(m["beta0"])) for m in p["models"])
            return AccModel(models=models,
                            cluster_features=np.asarray(p["cluster_features"], np.intp),
                            L=int(p["L"]), trace=tuple(p["trace"]),
                            final_assignment=np.asarray(p["final_assignment"], np.int64))
        raise SchemaError(f"unknown model kind {self.kind!r}")


def make_archive(kind: str, model, *, feature_names, imputation_means,
                 standardizer=None, quantizer=None, training_config=None) -> ModelArchive:
    if kind in ("slsvm", "lsvm"):
        payload = {"beta": model.beta.tolist(), "beta0": float(model.beta0)}
    elif kind == "logreg":
        payload = {"theta": model.theta.tolist(), "theta0": float(model.theta0),
                   "lambda": float(model.lam)}
    elif kind == "klrt":
        payload = {"tables": [t.tolist() for t in model.tables],
                   "level_counts": list(model.level_counts),
                   "smoothing": float(model.smoothing)}
    elif kind in CLUSTERED_KINDS:
        payload = {"models": [{"beta": m.beta.tolist(), "beta0": float(m.beta0)}
                              for m in model.models],
                   "cluster_features": [int(i) for i in model.cluster_features],
                   "L": int(model.L),
                   "trace": [float(z) for z in model.trace],
                   "final_assignment": [int(a) for a in model.final_assignment]}
    else:
        raise SchemaError(f"unknown model kind {kind!r}")
    return ModelArchive(kind=kind, payload=payload,
                        feature_names=tuple(feature_names),
                        imputation_means=np.asarray(imputation_means, float),
                        standardizer=standardizer, quantizer=quantizer,
                        training_config=dict(training_config or {}))


def save_model(archive: ModelArchive, path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": archive.kind,
        "library_version": archive.library_version,
        "payload": archive.payload,
        "metadata": {
            "feature_names": list(archive.feature_names),
            "imputation_means": archive.imputation_means.tolist(),
            "standardizer": (None if archive.standardizer is None else
                             {"mean": archive.standardizer.mean.tolist(),
                              "scale": archive.standardizer.scale.tolist()}),
            "quantizer": (None if archive.quantizer is None else
                          archive.quantizer.to_jsonable()),
            "training_config": archive.training_config,
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_model(path) -> ModelArchive:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported archive schema version {doc.get('schema_version')!r}")
    if doc.get("kind") not in ALL_KINDS:
        raise SchemaError(f"unknown model kind {doc.get('kind')!r}")
    meta = doc["metadata"]
    std = meta.get("standardizer")
    quant = meta.get("quantizer")
    return ModelArchive(
        kind=doc["kind"],
        payload=doc["payload"],
        feature_names=tuple(meta["feature_names"]),
        imputation_means=np.asarray(meta["imputation_means"], float),
        standardizer=(None if std is None else
                      Standardizer(mean=np.asarray(std["mean"], float),
                                   scale=np.asarray(std["scale"], float))),
        quantizer=(None if quant is None else ResolvedQuantizer.from_jsonable(quant)),
        training_config=meta.get("training_config", {}),
        library_version=doc.get("library_version", "unknown"),
    )


def _prepared_matrix(archive: ModelArchive, features, feature_names=None) -> np.ndarray:
    """Align columns to the training layout and fill missing cells with the
    stored training means."""
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if feature_names is not None and tuple(feature_names) != archive.feature_names:
        names = list(feature_names)
        try:
            order = [names.index(n) for n in archive.feature_names]
        except ValueError as exc:
            raise SchemaError(f"input is missing feature {exc}") from None
        X = X[:, order]
    if X.shape[1] != len(archive.feature_names):
        raise SchemaError(
            f"expected {len(archive.feature_names)} features, got {X.shape[1]}")
    missing = ~np.isfinite(X)
    if missing.any():
        X = np.where(missing, archive.imputation_means[None, :], X)
    # normalize memory layout so BLAS summation order (and thus the exact
    # floating-point result) does not depend on how the caller sliced X
    return np.ascontiguousarray(X)


def archive_scores(archive: ModelArchive, features, feature_names=None) -> np.ndarray:
    """Scores for raw (unstandardized, unquantized) feature rows."""
    X = _prepared_matrix(archive, features, feature_names)
    model = archive.model()
    if archive.kind == "klrt":
        from .data import Dataset, QuantizedDataset  # local to avoid cycles
        d = Dataset(features=X, labels=np.ones(len(X), dtype=np.int64),
                    feature_names=archive.feature_names,
                    missing_mask=np.zeros(X.shape, dtype=bool))
        q = archive.quantizer.transform(d)
        K = int(archive.training_config.get("K", model.n_features))
        return score_rows(model, q, K)
    if archive.standardizer is not None:
        X = archive.standardizer.transform_matrix(X)
    if archive.kind in ("slsvm", "lsvm"):
        return decision_values(model, X)
    if archive.kind == "logreg":
        return X @ model.theta + model.theta0
    return acc_scores(model, X)


def archive_predictions(archive: ModelArchive, features, feature_names=None):
    """(cluster, score, label) triples; cluster is None for flat models."""
    X = _prepared_matrix(archive, features, feature_names)
    scores = archive_scores(archive, X)
    labels = np.where(scores > 0, 1, -1)
    if archive.kind in CLUSTERED_KINDS:
        model = archive.model()
        Xs = archive.standardizer.transform_matrix(X) if archive.standardizer else X
        clusters = acc_assign(model, Xs)
        return [(int(c), float(s), int(l)) for c, s, l in zip(clusters, scores, labels)]
    return [(None, float(s), int(l)) for s, l in zip(scores, labels)]
