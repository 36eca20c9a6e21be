"""Gradient-boosted trees on the logit scale.

Each round fits a depth-limited regression tree to the logistic-loss
gradients and hessians with Newton leaf weights w = -G/(H + lambda), then
applies shrinkage. Row subsampling is per round, column subsampling per
tree; the base score is the training log-odds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabrisk.errors import ConfigError, DataError
from tabrisk.models.logistic import _sigmoid
from tabrisk.models.tree import Tree, grow_newton_tree
from tabrisk.rng import derive_rng

LAMBDA = 1.0  # leaf-weight ridge term


@dataclass(frozen=True)
class GbdtHyper:
    n_rounds: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    min_child_weight: float = 1.0
    subsample: float = 1.0
    colsample: float = 1.0

    def __post_init__(self):
        if self.n_rounds < 0 or self.max_depth < 1:
            raise ConfigError("n_rounds must be >= 0 and max_depth >= 1")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.min_child_weight < 0:
            raise ConfigError("min_child_weight must be >= 0")
        for name in ("subsample", "colsample"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigError(f"{name} must be in (0, 1]")


@dataclass(frozen=True)
class GbdtModel:
    base_score: float
    trees: tuple[Tree, ...]
    hyper: GbdtHyper
    n_features: int

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        z = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            z += self.hyper.learning_rate * tree.predict(X)
        return z

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            return np.empty(0)
        return _sigmoid(self.decision(X))


def fit_gbdt(X: np.ndarray, y: np.ndarray, hyper: GbdtHyper, seed: int = 0) -> GbdtModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.isfinite(X).all():
        raise DataError("gradient boosting requires finite inputs")
    n, d = X.shape
    prevalence = float(np.clip(y.mean(), 1e-7, 1 - 1e-7))
    base = float(np.log(prevalence / (1 - prevalence)))
    rng = derive_rng(seed, "gbdt")
    z = np.full(n, base)
    trees: list[Tree] = []
    n_cols = max(1, int(round(hyper.colsample * d)))
    n_rows = max(1, int(round(hyper.subsample * n)))
    for _ in range(hyper.n_rounds):
        p = _sigmoid(z)
        g = p - y
        h = np.maximum(p * (1 - p), 1e-16)
        rows = (np.sort(rng.choice(n, size=n_rows, replace=False))
                if n_rows < n else np.arange(n))
        features = (np.sort(rng.choice(d, size=n_cols, replace=False))
                    if n_cols < d else np.arange(d))
        tree = grow_newton_tree(
            X, g, h, rows, features,
            max_depth=hyper.max_depth, min_leaf=1,
            min_child_weight=hyper.min_child_weight, lam=LAMBDA,
        )
        trees.append(tree)
        z = z + hyper.learning_rate * tree.predict(X)
    return GbdtModel(base_score=base, trees=tuple(trees), hyper=hyper, n_features=d)
