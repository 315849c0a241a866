import numpy as np
import pytest

from clustclass.data import Dataset


def make_dataset(features, labels, names=None, mask=None) -> Dataset:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels)
    if names is None:
        names = tuple(f"f{j}" for j in range(features.shape[1]))
    if mask is None:
        mask = np.zeros(features.shape, dtype=bool)
    return Dataset(features=features, labels=labels, feature_names=names,
                   missing_mask=mask)


def random_two_class(rng, n, d, pos_frac=0.4, scale=1.0):
    """Random dense instance guaranteed to contain both classes."""
    X = rng.normal(size=(n, d)) * scale
    n_pos = max(1, min(n - 1, int(round(n * pos_frac))))
    y = np.concatenate([np.ones(n_pos, dtype=np.int64),
                        -np.ones(n - n_pos, dtype=np.int64)])
    rng.shuffle(y)
    return X, y


def grid_min(objective, dim, rounds=18, pts=15, radius=8.0):
    """Multiscale dense grid minimizer over R^dim.

    `objective` maps an (M, dim) array of candidate points to M values
    (np.inf marks infeasible points). The search recenters on the best
    grid point each round, shrinking the box, and re-expands whenever the
    winner lies on the box edge so narrow valleys are followed. Only
    objective evaluations are used, keeping the oracle independent of any
    solver internals.
    """
    center = np.zeros(dim)
    best_val = np.inf
    for _ in range(rounds):
        axes = [np.linspace(c - radius, c + radius, pts) for c in center]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        vals = objective(mesh)
        k = int(np.argmin(vals))
        best_val = min(best_val, float(vals[k]))
        new_center = mesh[k]
        on_edge = np.any(np.abs(new_center - center) >= radius * (1 - 1e-12))
        center = new_center
        radius = radius * (3.0 if on_edge else 0.4)
    return best_val


def penalized_grid_objective(X, y, C, rho):
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    d = X.shape[1]

    def objective(pts):
        B, b0 = pts[:, :d], pts[:, d]
        margins = 1.0 - y[None, :] * (B @ X.T + b0[:, None])
        return (0.5 * (B ** 2).sum(axis=1)
                + C * np.maximum(0.0, margins).sum(axis=1)
                + rho * np.abs(B).sum(axis=1))

    return objective


def constrained_grid_objective(pos, neg, lam_p, lam_m, T):
    pos = np.asarray(pos, float)
    neg = np.asarray(neg, float)
    d = pos.shape[1]

    def objective(pts):
        B, b0 = pts[:, :d], pts[:, d]
        xi = np.maximum(0.0, 1.0 - (B @ pos.T + b0[:, None]))
        zeta = np.maximum(0.0, 1.0 + (B @ neg.T + b0[:, None]))
        val = (0.5 * (B ** 2).sum(axis=1) + lam_p * xi.sum(axis=1)
               + lam_m * zeta.sum(axis=1))
        return np.where(np.abs(B).sum(axis=1) <= T + 1e-12, val, np.inf)

    return objective


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
