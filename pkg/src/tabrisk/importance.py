"""Permutation feature importance and cross-model rank averaging.

Importance of a source feature is the mean drop in AUC-ROC on the
evaluation matrix when its columns (all one-hot slots jointly) are
shuffled; negative drops are reported as-is. Each (feature, repeat) task
derives its own seed from (root seed, feature index, repeat index), so
tasks can run in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from tabrisk.errors import DataError
from tabrisk.evalmetrics import auc_roc
from tabrisk.rng import derive_rng


@dataclass(frozen=True)
class ImportanceResult:
    features: tuple[str, ...]
    mean_dauc: np.ndarray
    std_dauc: np.ndarray
    repeats: int
    baseline_auc: float


def permutation_importance(model, X: np.ndarray, y: np.ndarray,
                           groups: dict[str, list[int]], repeats: int = 10,
                           seed: int = 0) -> ImportanceResult:
    """Mean ΔAUC per source feature over seeded repeats.

    groups maps a source feature to the matrix columns it owns; one-hot
    slots are permuted as a block so rows stay valid.
    """
    if repeats < 1:
        raise DataError(f"repeats must be >= 1, got {repeats}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise DataError("permutation importance needs both classes in y")
    baseline = auc_roc(model.predict_proba(X), y)
    names = tuple(groups.keys())
    means = np.empty(len(names))
    stds = np.empty(len(names))
    n = X.shape[0]
    for fi, name in enumerate(names):
        cols = groups[name]
        deltas = np.empty(repeats)
        for rep in range(repeats):
            rng = derive_rng(seed, "perm-importance", fi, rep)
            perm = rng.permutation(n)
            shuffled = X.copy()
            shuffled[:, cols] = X[np.ix_(perm, cols)]
            deltas[rep] = baseline - auc_roc(model.predict_proba(shuffled), y)
        means[fi] = deltas.mean()
        stds[fi] = deltas.std()
    return ImportanceResult(features=names, mean_dauc=means, std_dauc=stds,
                            repeats=repeats, baseline_auc=baseline)


@dataclass(frozen=True)
class RankTable:
    features: tuple[str, ...]
    mean_rank: np.ndarray  # 1 = most important, averaged across models
    per_model: dict[str, np.ndarray]


def average_ranks(results: dict[str, ImportanceResult]) -> RankTable:
    """Rank features per model by descending mean ΔAUC (ties averaged),
    then average the rank indices across models."""
    if not results:
        raise DataError("average_ranks needs at least one importance result")
    items = list(results.items())
    features = items[0][1].features
    for name, res in items:
        if res.features != features:
            raise DataError(f"importance result {name!r} has a mismatched feature set")
    per_model = {}
    total = np.zeros(len(features))
    for name, res in items:
        ranks = rankdata(-res.mean_dauc, method="average")
        per_model[name] = ranks
        total += ranks
    return RankTable(features=features, mean_rank=total / len(items),
                     per_model=per_model)
