"""Alternating cluster-and-classify training.

One cycle trains a budgeted sparse SVM per cluster (negatives shared into
every cluster) and then re-assigns each positive to the cluster whose
classifier projects it furthest on the routing feature set, committing a
move only when the full-dimensional decision value does not drop. That
guard makes the summed per-cluster objective Z non-increasing across
cycles, which is also enforced at runtime.

Also provides one-shot k-means baselines (cluster once, then train per
cluster) and the correlation-based routing feature selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolationError
from .jcc import empty_cluster_model
from .svm import LinearModel, SvmConstrainedParams, train_constrained

DEFAULT_MAX_ITERS = 100
DEFAULT_Z_TOLERANCE = 1e-8
DEFAULT_RESTARTS = 5
DEFAULT_CORRELATION_THRESHOLD = 0.01


@dataclass(frozen=True)
class AccConfig:
    """Settings for one alternating training run.

    The class weights live in `params` and are shared by construction
    across clusters (convergence requires it). `restarts` independent
    initializations are run and the best final Z wins.
    """

    L: int
    params: SvmConstrainedParams
    max_iters: int = DEFAULT_MAX_ITERS
    z_tolerance: float = DEFAULT_Z_TOLERANCE
    init: str = "random"  # random | kmeans | given
    seed: int = 0
    restarts: int = DEFAULT_RESTARTS
    initial_assignment: np.ndarray | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.init not in ("random", "kmeans", "given"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "given" and self.initial_assignment is None:
            raise ValueError("init='given' needs initial_assignment")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


@dataclass(frozen=True)
class AccModel:
    """L per-cluster linear models plus the routing feature subset."""

    models: tuple[LinearModel, ...]
    cluster_features: np.ndarray
    L: int
    trace: tuple[float, ...]
    final_assignment: np.ndarray

    def __post_init__(self):
        if len(self.cluster_features) == 0:
            raise InvariantViolationError("routing feature set must be nonempty")
        diffs = np.diff(np.asarray(self.trace))
        if diffs.size and diffs.max() > 1e-9:
            raise InvariantViolationError(
                f"objective trace must be non-increasing, found rise {diffs.max():.3e}")

    @property
    def objective(self) -> float:
        return self.trace[-1]


def select_cluster_features(features, labels,
                            threshold: float = DEFAULT_CORRELATION_THRESHOLD) -> np.ndarray:
    """Indices of features whose absolute correlation with the labels
    exceeds `threshold`. Falls back to all features when none qualify."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    denom = np.sqrt((xc ** 2).sum(axis=0) * (yc ** 2).sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0, (xc * yc[:, None]).sum(axis=0) / denom, 0.0)
    chosen = np.flatnonzero(np.abs(corr) > threshold)
    if chosen.size == 0:
        return np.arange(X.shape[1])
    return chosen


def recluster(positives, models, cluster_features, current) -> np.ndarray:
    """One re-assignment pass.

    Candidate cluster per sample: argmax of the routing projection
    x_C' beta_C (lowest index on ties). The move is committed only when
    the candidate's full decision value x' beta + beta0 is at least the
    current cluster's; otherwise the sample stays put.
    """
    positives = np.asarray(positives, dtype=float)
    current = np.asarray(current, dtype=np.int64)
    C = np.asarray(cluster_features, dtype=np.intp)
    B = np.stack([m.beta for m in models])          # L x D
    b0 = np.array([m.beta0 for m in models])
    routing = positives[:, C] @ B[:, C].T           # N+ x L
    candidate = np.argmax(routing, axis=1)
    full = positives @ B.T + b0[None, :]            # N+ x L
    rows = np.arange(len(current))
    ok = full[rows, candidate] >= full[rows, current]
    return np.where(ok, candidate, current)


def acc_predict(m: AccModel, x) -> tuple[int, float, int]:
    """Route one row to its argmax-projection cluster and classify there.

    Returns (cluster id, decision value, label); ties on the routing
    projection pick the lowest cluster id, and a decision value of exactly
    zero classifies as -1.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != m.models[0].beta.shape:
        raise ValueError(
            f"dimension mismatch: model D={m.models[0].beta.shape[0]}, row has {x.shape}")
    C = np.asarray(m.cluster_features, dtype=np.intp)
    routing = np.array([x[C] @ mdl.beta[C] for mdl in m.models])
    cluster = int(np.argmax(routing))
    value = float(x @ m.models[cluster].beta + m.models[cluster].beta0)
    return cluster, value, (1 if value > 0 else -1)


def acc_scores(m: AccModel, X) -> np.ndarray:
    """Routed decision values for every row of X."""
    X = np.asarray(X, dtype=float)
    C = np.asarray(m.cluster_features, dtype=np.intp)
    B = np.stack([mdl.beta for mdl in m.models])
    b0 = np.array([mdl.beta0 for mdl in m.models])
    routed = np.argmax(X[:, C] @ B[:, C].T, axis=1)
    full = X @ B.T + b0[None, :]
    return full[np.arange(len(X)), routed]


def acc_assign(m: AccModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    C = np.asarray(m.cluster_features, dtype=np.intp)
    B = np.stack([mdl.beta for mdl in m.models])
    return np.argmax(X[:, C] @ B[:, C].T, axis=1)


class _RunState:
    """Per-run trainer with memoized cluster solves (shared budget)."""

    def __init__(self, positives, negatives, params, tol=1e-8):
        self.positives = positives
        self.negatives = negatives
        self.params = params
        self.tol = tol
        self.cache: dict = {}

    def solve(self, members: tuple[int, ...]):
        if not members:
            return empty_cluster_model(self.positives.shape[1]), 0.0, np.zeros(0)
        hit = self.cache.get(members)
        if hit is None:
            sol = train_constrained(self.positives[list(members)], self.negatives,
                                    self.params, tol=self.tol)
            hit = (sol.model, sol.objective, sol.xi)
            self.cache[members] = hit
        return hit

    def train_all(self, assignment, L):
        models, objs, slacks = [], [], {}
        for l in range(L):
            members = tuple(int(i) for i in np.flatnonzero(assignment == l))
            model, obj, xi = self.solve(members)
            models.append(model)
            objs.append(obj)
            for i, s in zip(members, xi):
                slacks[i] = float(s)
        return models, objs, slacks


def _reseed_empty_clusters(state: _RunState, assignment, models, objs, slacks, L):
    """Move the worst-classified positive from the most populous cluster
    into an empty one, keeping the change only when Z strictly improves."""
    assignment = assignment.copy()
    while True:
        counts = np.bincount(assignment, minlength=L)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0 or counts.max() < 2:
            return assignment, models, objs, slacks
        target = int(empties[0])
        donor = int(np.argmax(counts))
        donor_members = np.flatnonzero(assignment == donor)
        worst = int(max(donor_members, key=lambda i: slacks.get(int(i), 0.0)))
        trial = assignment.copy()
        trial[worst] = target
        new_models, new_objs, new_slacks = state.train_all(trial, L)
        if sum(new_objs) < sum(objs):
            assignment, models, objs, slacks = trial, new_models, new_objs, new_slacks
        else:
            return assignment, models, objs, slacks


def _initial_assignment(cfg: AccConfig, positives, cluster_features, seed):
    n = positives.shape[0]
    if cfg.init == "given":
        a = np.asarray(cfg.initial_assignment, dtype=np.int64)
        if a.shape != (n,) or a.min() < 0 or a.max() >= cfg.L:
            raise ValueError("initial_assignment must map every positive to 0..L-1")
        return a.copy()
    if cfg.init == "kmeans":
        return kmeans(positives[:, cluster_features], cfg.L, seed=seed)[0]
    return np.random.default_rng(seed).integers(0, cfg.L, size=n)


def acc_train(positives, negatives, cfg: AccConfig,
              cluster_features=None) -> AccModel:
    """Alternate per-cluster training and re-clustering until assignments
    stabilize or Z stops decreasing.

    Runs cfg.restarts independent initializations (seeds cfg.seed,
    cfg.seed+1, ...) and keeps the lowest final Z. The winning run's Z
    trace is exposed on the model; a Z rise beyond cfg.z_tolerance in any
    run aborts with a diagnostic.
    """
    positives = np.atleast_2d(np.asarray(positives, dtype=float))
    negatives = np.atleast_2d(np.asarray(negatives, dtype=float))
    if positives.shape[0] == 0 or negatives.shape[0] == 0:
        raise ValueError("both classes must be nonempty")
    if cfg.L > positives.shape[0]:
        raise ValueError(f"L={cfg.L} exceeds the positive count {positives.shape[0]}")
    if cluster_features is None:
        X = np.vstack([positives, negatives])
        y = np.concatenate([np.ones(len(positives)), -np.ones(len(negatives))])
        cluster_features = select_cluster_features(X, y)
    cluster_features = np.asarray(cluster_features, dtype=np.intp)

    state = _RunState(positives, negatives, cfg.params)
    best = None
    restarts = 1 if cfg.init == "given" else cfg.restarts
    for r in range(restarts):
        model = _single_run(state, positives, cfg, cluster_features, cfg.seed + r)
        if best is None or model.objective < best.objective:
            best = model
    return best


def _single_run(state: _RunState, positives, cfg: AccConfig,
                cluster_features, seed) -> AccModel:
    assignment = _initial_assignment(cfg, positives, cluster_features, seed)
    models, objs, slacks = state.train_all(assignment, cfg.L)
    assignment, models, objs, slacks = _reseed_empty_clusters(
        state, assignment, models, objs, slacks, cfg.L)
    z = sum(objs)
    trace = [z]
    for _ in range(cfg.max_iters):
        proposal = recluster(positives, models, cluster_features, assignment)
        if np.array_equal(proposal, assignment):
            break
        new_models, new_objs, new_slacks = state.train_all(proposal, cfg.L)
        proposal, new_models, new_objs, new_slacks = _reseed_empty_clusters(
            state, proposal, new_models, new_objs, new_slacks, cfg.L)
        z_new = sum(new_objs)
        if z_new > z + cfg.z_tolerance:
            raise InvariantViolationError(
                f"objective rose from {z:.12g} to {z_new:.12g} after re-clustering; "
                f"this breaks the descent guarantee")
        if z_new > z:
            # numerically flat; stop on the already-recorded state
            break
        assignment, models, objs, slacks = proposal, new_models, new_objs, new_slacks
        trace.append(z_new)
        if z - z_new <= cfg.z_tolerance:
            break
        z = z_new
    return AccModel(models=tuple(models), cluster_features=cluster_features,
                    L=cfg.L, trace=tuple(trace), final_assignment=assignment)


def ct_baseline(positives, negatives, L: int, sparse: bool,
                params: SvmConstrainedParams, seed: int = 0,
                cluster_features=None) -> AccModel:
    """Cluster-then-train baseline: one k-means pass over the positives on
    the routing features, negatives copied into each cluster, then one
    budgeted (sparse=True) or unbudgeted (sparse=False) SVM per cluster.
    No alternation."""
    positives = np.atleast_2d(np.asarray(positives, dtype=float))
    negatives = np.atleast_2d(np.asarray(negatives, dtype=float))
    if positives.shape[0] == 0 or negatives.shape[0] == 0:
        raise ValueError("both classes must be nonempty")
    if cluster_features is None:
        X = np.vstack([positives, negatives])
        y = np.concatenate([np.ones(len(positives)), -np.ones(len(negatives))])
        cluster_features = select_cluster_features(X, y)
    cluster_features = np.asarray(cluster_features, dtype=np.intp)
    run_params = params if sparse else SvmConstrainedParams(
        params.lambda_plus, params.lambda_minus, np.inf)
    assignment = kmeans(positives[:, cluster_features], L, seed=seed)[0]
    state = _RunState(positives, negatives, run_params)
    models, objs, _ = state.train_all(assignment, L)
    return AccModel(models=tuple(models), cluster_features=cluster_features,
                    L=L, trace=(sum(objs),), final_assignment=assignment)


def kmeans(points, k: int, seed: int = 0, max_iters: int = 200):
    """Plain Lloyd iteration with a seeded greedy spread initialization.

    A cluster that empties is re-seeded at the point farthest from its
    assigned centroid. Returns (assignment, centroids), deterministic per
    seed.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    rng = np.random.default_rng(seed)
    centroids = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min([((points - c) ** 2).sum(axis=1) for c in centroids], axis=0)
        centroids.append(points[int(np.argmax(d2))])
    centroids = np.stack(centroids)
    assignment = None
    for _step in range(max_iters):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignment = np.argmin(d2, axis=1)
        for c in range(k):
            if not (new_assignment == c).any():
                dist_own = d2[np.arange(n), new_assignment]
                new_assignment[int(np.argmax(dist_own))] = c
        if assignment is not None and np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(k):
            centroids[c] = points[assignment == c].mean(axis=0)
    return assignment, centroids
