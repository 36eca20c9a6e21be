"""L2-regularized logistic regression.

Full-batch gradient descent with backtracking line search: deterministic
and adequate at this scale. The whole parameter vector, intercept
included, carries the penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabrisk.errors import ConfigError, DataError


@dataclass(frozen=True)
class LogisticHyper:
    l2_strength: float = 1e-3
    max_iters: int = 500
    tol: float = 1e-6

    def __post_init__(self):
        if self.l2_strength < 0:
            raise ConfigError("l2_strength must be >= 0")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ConfigError("tol must be > 0")


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LogisticModel:
    coef: np.ndarray
    intercept: float
    hyper: LogisticHyper
    n_features: int
    converged: bool

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            return np.empty(0)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        return _sigmoid(X @ self.coef + self.intercept)


def fit_logistic(X: np.ndarray, y: np.ndarray, hyper: LogisticHyper,
                 seed: int = 0) -> LogisticModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.isfinite(X).all():
        raise DataError("logistic regression requires finite inputs")
    n, d = X.shape
    lam = hyper.l2_strength
    w = np.zeros(d + 1)  # intercept last
    Xb = np.column_stack([X, np.ones(n)])
    sign = 2.0 * y - 1.0

    def loss(weights):
        margins = sign * (Xb @ weights)
        return float(np.logaddexp(0.0, -margins).mean() + 0.5 * lam * weights @ weights)

    def grad(weights):
        p = _sigmoid(Xb @ weights)
        return Xb.T @ (p - y) / n + lam * weights

    current = loss(w)
    converged = False
    for _ in range(hyper.max_iters):
        g = grad(w)
        gnorm = float(np.linalg.norm(g))
        if gnorm < hyper.tol:
            converged = True
            break
        step = 1.0
        descent = float(g @ g)
        while step > 1e-12:
            candidate = w - step * g
            new = loss(candidate)
            if new <= current - 1e-4 * step * descent:
                break
            step *= 0.5
        w = w - step * g
        current = loss(w)
    return LogisticModel(coef=w[:d].copy(), intercept=float(w[d]), hyper=hyper,
                         n_features=d, converged=converged)
