"""CART machinery shared by the forest and boosting families.

Trees are struct-of-arrays; split search runs on presorted views through
the kernel backend (compiled or numpy, selected at import).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabrisk._kernels import gini_scan, newton_scan

NO_FEATURE = -1


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # int32, NO_FEATURE at leaves
    threshold: np.ndarray  # float64; rows with x <= threshold go left
    left: np.ndarray  # int32 child ids
    right: np.ndarray
    value: np.ndarray  # float64 leaf payload (class fraction or leaf weight)

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat != NO_FEATURE
            if not active.any():
                break
            rows = np.flatnonzero(active)
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]

    def leaf_of(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat != NO_FEATURE
            if not active.any():
                return node
            rows = np.flatnonzero(active)
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


class _TreeBuilder:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self, value: float) -> int:
        self.feature.append(NO_FEATURE)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.feature) - 1

    def split(self, node: int, feature: int, threshold: float, left: int, right: int) -> None:
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right

    def freeze(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value),
        )


def grow_gini_tree(X: np.ndarray, y: np.ndarray, rows: np.ndarray,
                   rng: np.random.Generator, *, max_depth: int, min_leaf: int,
                   min_split: int, n_split_features: int) -> Tree:
    """Classification tree on the given row multiset, Gini criterion.

    A fresh feature subset of size n_split_features is drawn per split;
    candidate features are scanned in ascending index order so score ties
    break toward the lower feature index.
    """
    d = X.shape[1]
    y = np.asarray(y, dtype=np.float64)
    builder = _TreeBuilder()
    root = builder.add(float(y[rows].mean()))
    stack = [(root, rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        n = node_rows.shape[0]
        n1 = float(y[node_rows].sum())
        if depth >= max_depth or n < min_split or n1 == 0.0 or n1 == n:
            continue
        if n_split_features < d:
            subset = np.sort(rng.choice(d, size=n_split_features, replace=False))
        else:
            subset = np.arange(d)
        parent_score = n1 * (n - n1) / n
        best_score = np.inf
        best = None
        for f in subset:
            v = X[node_rows, f]
            order = np.argsort(v, kind="stable")
            score, idx = gini_scan(np.ascontiguousarray(v[order]),
                                   np.ascontiguousarray(y[node_rows][order]),
                                   min_leaf)
            if idx >= 0 and score < best_score:
                best_score = score
                best = (int(f), order, idx)
        if best is None or not best_score < parent_score:
            continue
        f, order, idx = best
        v_sorted = X[node_rows, f][order]
        threshold = (v_sorted[idx] + v_sorted[idx + 1]) / 2.0
        left_rows = node_rows[order[: idx + 1]]
        right_rows = node_rows[order[idx + 1:]]
        left = builder.add(float(y[left_rows].mean()))
        right = builder.add(float(y[right_rows].mean()))
        builder.split(node, f, float(threshold), left, right)
        stack.append((right, right_rows, depth + 1))
        stack.append((left, left_rows, depth + 1))
    return builder.freeze()


def grow_newton_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, rows: np.ndarray,
                     features: np.ndarray, *, max_depth: int, min_leaf: int,
                     min_child_weight: float, lam: float) -> Tree:
    """Regression tree on gradient/hessian pairs with Newton leaf weights
    w = -G/(H+lam); splits require a strict second-order gain."""
    builder = _TreeBuilder()

    def leaf_weight(node_rows):
        gs = float(g[node_rows].sum())
        hs = float(h[node_rows].sum())
        return -gs / (hs + lam)

    root = builder.add(leaf_weight(rows))
    stack = [(root, rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        if depth >= max_depth or node_rows.shape[0] < 2 * min_leaf:
            continue
        gs = float(g[node_rows].sum())
        hs = float(h[node_rows].sum())
        parent_gain = gs * gs / (hs + lam)
        best_gain = -np.inf
        best = None
        for f in features:
            v = X[node_rows, f]
            order = np.argsort(v, kind="stable")
            gain, idx = newton_scan(np.ascontiguousarray(v[order]),
                                    np.ascontiguousarray(g[node_rows][order]),
                                    np.ascontiguousarray(h[node_rows][order]),
                                    lam, min_leaf, min_child_weight)
            if idx >= 0 and gain > best_gain:
                best_gain = gain
                best = (int(f), order, idx)
        # >= keeps symmetric nodes splittable (zero-gain split, zero-weight
        # leaves) so real gain one level down stays reachable
        if best is None or not best_gain >= parent_gain:
            continue
        f, order, idx = best
        v_sorted = X[node_rows, f][order]
        threshold = (v_sorted[idx] + v_sorted[idx + 1]) / 2.0
        left_rows = node_rows[order[: idx + 1]]
        right_rows = node_rows[order[idx + 1:]]
        left = builder.add(leaf_weight(left_rows))
        right = builder.add(leaf_weight(right_rows))
        builder.split(node, f, float(threshold), left, right)
        stack.append((right, right_rows, depth + 1))
        stack.append((left, left_rows, depth + 1))
    return builder.freeze()


def tree_to_dict(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }


def tree_from_dict(doc: dict) -> Tree:
    return Tree(
        feature=np.asarray(doc["feature"], dtype=np.int32),
        threshold=np.asarray(doc["threshold"], dtype=np.float64),
        left=np.asarray(doc["left"], dtype=np.int32),
        right=np.asarray(doc["right"], dtype=np.int32),
        value=np.asarray(doc["value"], dtype=np.float64),
    )
