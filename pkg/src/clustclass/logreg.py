"""l1-regularized logistic regression.

The negative log-likelihood is minimized together with lambda*||theta||_1
(the offset theta0 is never penalized). The l1 term is handled by the
nonnegative split theta = w_plus - w_minus, which turns the problem into a
smooth bound-constrained convex program solved with L-BFGS-B. Likelihood
and gradient are evaluated in log-sum-exp form so large logits cannot
overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .errors import SolverError

#: Logits are clamped to this magnitude so predicted probabilities never
#: underflow to exactly 0 or 1.
LOGIT_CLAMP = 700.0


@dataclass(frozen=True)
class LogisticModel:
    theta: np.ndarray
    theta0: float
    lam: float


def nll_and_grad(theta: np.ndarray, theta0: float, X: np.ndarray, y: np.ndarray):
    """Negative log-likelihood of +1/-1 labels and its gradient.

    Returns (value, grad_theta, grad_theta0). This is the smooth part of
    the training objective; the l1 term is added separately.
    """
    z = X @ theta + theta0
    yz = y * z
    value = float(np.logaddexp(0.0, -yz).sum())
    coef = -y * expit(-yz)
    return value, X.T @ coef, float(coef.sum())


def train_lr(train, lam: float, tol: float = 1e-9, max_iter: int = 2000) -> LogisticModel:
    """Fit the l1-penalized logistic model on a Dataset."""
    X = np.asarray(train.features, dtype=float)
    y = np.asarray(train.labels, dtype=float)
    if not ((y > 0).any() and (y < 0).any()):
        raise ValueError("training data must contain both classes")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    n, d = X.shape

    def objective(params):
        wp, wm, t0 = params[:d], params[d:2 * d], params[-1]
        theta = wp - wm
        value, g_theta, g_t0 = nll_and_grad(theta, t0, X, y)
        value += lam * (wp.sum() + wm.sum())
        grad = np.concatenate([g_theta + lam, -g_theta + lam, [g_t0]])
        return value, grad

    x0 = np.zeros(2 * d + 1)
    bounds = [(0.0, None)] * (2 * d) + [(None, None)]
    res = minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-10})
    if not res.success and res.status != 1:  # status 1 = hit maxiter
        raise SolverError(f"logistic solver failed: {res.message}",
                          best=res.x, residual=float(np.abs(res.jac).max()))
    theta = res.x[:d] - res.x[d:2 * d]
    return LogisticModel(theta=theta, theta0=float(res.x[-1]), lam=float(lam))


def logit(m: LogisticModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != m.theta.shape:
        raise ValueError(f"dimension mismatch: model D={m.theta.shape[0]}, row has {x.shape}")
    return float(x @ m.theta + m.theta0)


def predict_proba(m: LogisticModel, x) -> float:
    """P(label=+1 | x); always strictly inside (0, 1)."""
    z = np.clip(logit(m, x), -LOGIT_CLAMP, LOGIT_CLAMP)
    return float(expit(z))


def predict_proba_negative(m: LogisticModel, x) -> float:
    """P(label=-1 | x), the complement of predict_proba."""
    return 1.0 - predict_proba(m, x)


def predict_proba_matrix(m: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    z = np.clip(X @ m.theta + m.theta0, -LOGIT_CLAMP, LOGIT_CLAMP)
    return expit(z)


def training_objective(m: LogisticModel, train) -> float:
    value, _, _ = nll_and_grad(m.theta, m.theta0,
                               np.asarray(train.features, float),
                               np.asarray(train.labels, float))
    return value + m.lam * float(np.abs(m.theta).sum())
