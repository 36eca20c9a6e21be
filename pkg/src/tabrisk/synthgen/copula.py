"""Gaussian copula generator.

Numeric marginals go through their empirical CDF to standard-normal
scores; categoricals use latent-threshold scores keyed to training
frequencies. A regularized correlation matrix over the latent scores
drives joint sampling; marginals are inverted per draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from tabrisk.data import NUMERIC, ColumnSchema, Table, build_table
from tabrisk.rng import derive_rng
from tabrisk.synthgen.base import check_fit_rows, fingerprint_set

_EPS = 1e-6


def _nearest_pd_correlation(corr: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(corr)
    vals = np.maximum(vals, _EPS)
    fixed = vecs @ np.diag(vals) @ vecs.T
    scale = np.sqrt(np.diag(fixed))
    return fixed / np.outer(scale, scale)


@dataclass(frozen=True)
class CopulaGenerator:
    kind: str
    schemas: tuple[ColumnSchema, ...]
    sorted_values: dict[str, np.ndarray]  # numeric marginals
    frequencies: dict[str, np.ndarray]  # categorical marginals
    chol: np.ndarray
    training_fingerprints: frozenset[bytes]

    def sample(self, n: int, seed: int) -> Table:
        rng = derive_rng(seed, "copula-sample")
        z = rng.standard_normal((n, len(self.schemas))) @ self.chol.T
        u = ndtr(z)
        columns = []
        for j, s in enumerate(self.schemas):
            if s.kind == NUMERIC:
                values = self.sorted_values[s.name]
                columns.append(np.quantile(values, u[:, j], method="linear")
                               if n else np.empty(0))
            else:
                cum = np.cumsum(self.frequencies[s.name])
                cum[-1] = 1.0
                columns.append(np.searchsorted(cum, u[:, j], side="left").astype(np.int64))
        return build_table(self.schemas, columns, np.ones(n, dtype=np.int8))


def fit_gaussian_copula(rows: Table) -> CopulaGenerator:
    check_fit_rows(rows, 5, "copula")
    n = rows.n_rows
    scores = np.empty((n, rows.n_cols))
    sorted_values: dict[str, np.ndarray] = {}
    frequencies: dict[str, np.ndarray] = {}
    for j, s in enumerate(rows.schemas):
        col = rows.columns[j]
        if s.kind == NUMERIC:
            sorted_values[s.name] = np.sort(np.asarray(col, dtype=np.float64))
            u = rankdata(col) / (n + 1.0)
            scores[:, j] = ndtri(u)
        else:
            counts = np.bincount(np.asarray(col, dtype=np.int64),
                                 minlength=len(s.categories)).astype(np.float64)
            freq = counts / n
            frequencies[s.name] = freq
            cum = np.concatenate([[0.0], np.cumsum(freq)])
            mid = (cum[col] + cum[col + 1]) / 2.0
            scores[:, j] = ndtri(np.clip(mid, _EPS, 1.0 - _EPS))
    with np.errstate(invalid="ignore"):
        corr = np.corrcoef(scores, rowvar=False)
    corr = np.atleast_2d(corr)
    bad = ~np.isfinite(corr)
    if bad.any():  # constant latent column: decorrelate it
        corr[bad] = 0.0
        np.fill_diagonal(corr, 1.0)
    chol = np.linalg.cholesky(_nearest_pd_correlation(corr))
    return CopulaGenerator(
        kind="copula",
        schemas=rows.schemas,
        sorted_values=sorted_values,
        frequencies=frequencies,
        chol=chol,
        training_fingerprints=fingerprint_set(rows),
    )


def copula_to_dict(gen: CopulaGenerator) -> dict:
    return {
        "kind": "copula",
        "sorted_values": {k: v.tolist() for k, v in gen.sorted_values.items()},
        "frequencies": {k: v.tolist() for k, v in gen.frequencies.items()},
        "chol": gen.chol.tolist(),
    }
