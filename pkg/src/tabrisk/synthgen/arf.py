"""Adversarial random forest generator.

Alternates a real-vs-synthetic forest discriminator with leaf-based
resampling until the discriminator's out-of-bag accuracy drops to chance
(within a slack), then samples by drawing a leaf weighted by real-row
coverage and each feature from that leaf's real rows: truncated normals
for numerics, category frequencies for categoricals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from tabrisk.data import NUMERIC, ColumnSchema, Table, build_table
from tabrisk.models.forest import ForestHyper, ForestModel, fit_random_forest
from tabrisk.rng import derive_rng, derive_seed_sequence
from tabrisk.synthgen.base import check_fit_rows, fingerprint_set

DELTA = 0.05
MAX_ROUNDS = 10
_DISCRIMINATOR = ForestHyper(n_trees=100, max_depth=8, min_leaf=5,
                             min_split=10, max_features="sqrt", bootstrap=True)


@dataclass(frozen=True)
class _LeafStats:
    """Per-tree sampling table: leaf coverage plus per-leaf feature laws."""

    leaf_ids: np.ndarray
    weights: np.ndarray  # real-row coverage, normalized
    numeric: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    categorical: dict[int, np.ndarray]  # (n_leaves, n_categories) frequencies


def _leaf_bounds(tree, n_features: int) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    bounds: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    lo0 = np.full(n_features, -np.inf)
    hi0 = np.full(n_features, np.inf)
    stack = [(0, lo0, hi0)]
    while stack:
        node, lo, hi = stack.pop()
        f = tree.feature[node]
        if f < 0:
            bounds[node] = (lo, hi)
            continue
        thr = tree.threshold[node]
        lo_l, hi_l = lo.copy(), hi.copy()
        hi_l[f] = min(hi_l[f], thr)
        lo_r, hi_r = lo.copy(), hi.copy()
        lo_r[f] = max(lo_r[f], thr)
        stack.append((int(tree.left[node]), lo_l, hi_l))
        stack.append((int(tree.right[node]), lo_r, hi_r))
    return bounds


def _truncated_normal(rng, mu, sigma, lo, hi):
    if sigma <= 0:
        return float(mu)
    a = ndtr((lo - mu) / sigma)
    b = ndtr((hi - mu) / sigma)
    u = rng.uniform(a, b)
    return float(mu + sigma * ndtri(min(max(u, 1e-12), 1.0 - 1e-12)))


@dataclass(frozen=True)
class ArfGenerator:
    kind: str
    schemas: tuple[ColumnSchema, ...]
    forest: ForestModel | None  # None means marginal fallback
    stats: tuple[_LeafStats, ...]
    marginals: tuple[np.ndarray, ...]  # real columns for the fallback path
    rounds_run: int
    converged: bool
    oob_accuracies: tuple[float, ...]
    training_fingerprints: frozenset[bytes]

    def sample(self, n: int, seed: int) -> Table:
        rng = derive_rng(seed, "arf-sample")
        if n == 0:
            return build_table(self.schemas,
                               [np.empty(0) if s.kind == NUMERIC else np.empty(0, np.int64)
                                for s in self.schemas],
                               np.zeros(0, dtype=np.int8))
        if self.forest is None:
            columns = [col[rng.integers(0, col.shape[0], size=n)] for col in self.marginals]
            return build_table(self.schemas, columns, np.ones(n, dtype=np.int8))
        tree_pick = rng.integers(0, len(self.stats), size=n)
        columns = [np.empty(n) if s.kind == NUMERIC else np.empty(n, dtype=np.int64)
                   for s in self.schemas]
        for t, st in enumerate(self.stats):
            rows = np.flatnonzero(tree_pick == t)
            if rows.size == 0:
                continue
            leaf_pick = rng.choice(len(st.leaf_ids), size=rows.size, p=st.weights)
            for j, s in enumerate(self.schemas):
                if s.kind == NUMERIC:
                    mu, sigma, lo, hi = st.numeric[j]
                    for r, leaf in zip(rows, leaf_pick):
                        columns[j][r] = _truncated_normal(
                            rng, mu[leaf], sigma[leaf], lo[leaf], hi[leaf])
                else:
                    freqs = st.categorical[j]
                    for r, leaf in zip(rows, leaf_pick):
                        columns[j][r] = rng.choice(freqs.shape[1], p=freqs[leaf])
        return build_table(self.schemas, columns, np.ones(n, dtype=np.int8))


def _encode(table: Table) -> np.ndarray:
    cols = [np.asarray(c, dtype=np.float64) for c in table.columns]
    return np.column_stack(cols)


def _permuted_synthetic(real: np.ndarray, rng) -> np.ndarray:
    out = np.empty_like(real)
    for j in range(real.shape[1]):
        out[:, j] = real[rng.permutation(real.shape[0]), j]
    return out


def _collect_stats(forest: ForestModel, real: np.ndarray,
                   schemas: tuple[ColumnSchema, ...]) -> tuple[_LeafStats, ...]:
    stats = []
    for tree in forest.trees:
        leaves = tree.leaf_of(real)
        leaf_ids, counts = np.unique(leaves, return_counts=True)
        weights = counts / counts.sum()
        bounds = _leaf_bounds(tree, real.shape[1])
        numeric: dict[int, tuple] = {}
        categorical: dict[int, np.ndarray] = {}
        members = [np.flatnonzero(leaves == leaf) for leaf in leaf_ids]
        for j, s in enumerate(schemas):
            if s.kind == NUMERIC:
                mu = np.array([real[m, j].mean() for m in members])
                sigma = np.array([real[m, j].std() for m in members])
                lo = np.array([bounds[leaf][0][j] for leaf in leaf_ids])
                hi = np.array([bounds[leaf][1][j] for leaf in leaf_ids])
                numeric[j] = (mu, sigma, lo, hi)
            else:
                n_cat = len(s.categories)
                freqs = np.empty((len(leaf_ids), n_cat))
                for i, m in enumerate(members):
                    counts_j = np.bincount(real[m, j].astype(np.int64), minlength=n_cat)
                    freqs[i] = counts_j / counts_j.sum()
                categorical[j] = freqs
        stats.append(_LeafStats(leaf_ids=leaf_ids, weights=weights,
                                numeric=numeric, categorical=categorical))
    return tuple(stats)


def fit_arf(rows: Table, seed: int = 0) -> ArfGenerator:
    check_fit_rows(rows, 20, "adversarial forest")
    real = _encode(rows)
    n = real.shape[0]
    rng = derive_rng(seed, "arf-fit")
    forest_seeds = derive_seed_sequence(seed, "arf-forests").generate_state(MAX_ROUNDS)
    synthetic = _permuted_synthetic(real, rng)
    forest = None
    accuracies: list[float] = []
    converged = False
    rounds = 0
    for r in range(MAX_ROUNDS):
        rounds = r + 1
        X_disc = np.vstack([real, synthetic])
        y_disc = np.concatenate([np.ones(n), np.zeros(synthetic.shape[0])])
        forest = fit_random_forest(X_disc, y_disc, _DISCRIMINATOR, seed=int(forest_seeds[r]))
        if all(t.n_nodes == 1 for t in forest.trees):
            warnings.warn("ARF discriminator is degenerate (no splits); "
                          "falling back to independent marginals")
            return ArfGenerator(
                kind="arf", schemas=rows.schemas, forest=None, stats=(),
                marginals=tuple(np.asarray(c) for c in rows.columns),
                rounds_run=rounds, converged=False, oob_accuracies=tuple(accuracies),
                training_fingerprints=fingerprint_set(rows),
            )
        probs, has = forest.oob_proba(X_disc)
        acc = float((((probs >= 0.5) == (y_disc == 1))[has]).mean())
        accuracies.append(acc)
        if acc <= 0.5 + DELTA:
            converged = True
            break
        stats = _collect_stats(forest, real, rows.schemas)
        interim = ArfGenerator(
            kind="arf", schemas=rows.schemas, forest=forest, stats=stats,
            marginals=(), rounds_run=rounds, converged=False,
            oob_accuracies=tuple(accuracies),
            training_fingerprints=frozenset(),
        )
        synthetic = _encode(interim.sample(n, seed=int(rng.integers(2**31))))
    stats = _collect_stats(forest, real, rows.schemas)
    return ArfGenerator(
        kind="arf", schemas=rows.schemas, forest=forest, stats=stats,
        marginals=(), rounds_run=rounds, converged=converged,
        oob_accuracies=tuple(accuracies),
        training_fingerprints=fingerprint_set(rows),
    )
