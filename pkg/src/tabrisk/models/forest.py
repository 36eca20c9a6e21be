"""Random forest: bootstrapped Gini CART trees with per-split feature
subsampling; predicted probability is the mean of leaf positive fractions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabrisk.errors import ConfigError, DataError
from tabrisk.models.tree import Tree, grow_gini_tree
from tabrisk.rng import derive_seed_sequence


@dataclass(frozen=True)
class ForestHyper:
    n_trees: int = 300
    max_depth: int = 6
    min_leaf: int = 1
    min_split: int = 2
    max_features: str | int = "sqrt"
    bootstrap: bool = True

    def __post_init__(self):
        if min(self.n_trees, self.max_depth, self.min_leaf, self.min_split) < 1:
            raise ConfigError("forest counts must be >= 1")
        if isinstance(self.max_features, str) and self.max_features not in ("sqrt", "log2", "all"):
            raise ConfigError(f"max_features: bad value {self.max_features!r}")
        if isinstance(self.max_features, int) and self.max_features < 1:
            raise ConfigError("max_features must be >= 1")

    def n_split_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        if self.max_features == "log2":
            return max(1, int(np.log2(d)) if d > 1 else 1)
        if self.max_features == "all":
            return d
        return min(int(self.max_features), d)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    hyper: ForestHyper
    n_features: int
    inbag: np.ndarray | None  # (n_trees, n_train) bool when bootstrapped

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            return np.empty(0)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def oob_proba(self, X_train: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Out-of-bag probabilities on the training matrix.

        Returns (probs, has_estimate); rows in every bag get no estimate.
        """
        if self.inbag is None:
            raise DataError("out-of-bag estimates need bootstrap=True")
        n = X_train.shape[0]
        total = np.zeros(n)
        count = np.zeros(n)
        for t, tree in enumerate(self.trees):
            out = ~self.inbag[t]
            if out.any():
                total[out] += tree.predict(X_train[out])
                count[out] += 1
        has = count > 0
        probs = np.zeros(n)
        probs[has] = total[has] / count[has]
        return probs, has


def fit_random_forest(X: np.ndarray, y: np.ndarray, hyper: ForestHyper,
                      seed: int = 0) -> ForestModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.isfinite(X).all():
        raise DataError("random forest requires finite inputs")
    n, d = X.shape
    m = hyper.n_split_features(d)
    children = derive_seed_sequence(seed, "forest").spawn(hyper.n_trees)
    trees = []
    inbag = np.zeros((hyper.n_trees, n), dtype=bool) if hyper.bootstrap else None
    for t in range(hyper.n_trees):
        rng = np.random.default_rng(children[t])
        if hyper.bootstrap:
            rows = np.sort(rng.integers(0, n, size=n))
            inbag[t, np.unique(rows)] = True
        else:
            rows = np.arange(n)
        trees.append(grow_gini_tree(
            X, y, rows, rng,
            max_depth=hyper.max_depth, min_leaf=hyper.min_leaf,
            min_split=hyper.min_split, n_split_features=m,
        ))
    return ForestModel(trees=tuple(trees), hyper=hyper, n_features=d, inbag=inbag)
