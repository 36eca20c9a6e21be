"""Edge-case cohort sampling from per-column critical distributions.

Numeric columns draw from a declared normal; categoricals from a declared
probability table (critical levels typically at 0.8-0.9). Every sampled
row carries the positive label, whether used for stress testing or for
training augmentation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabrisk.data import NUMERIC, ColumnSchema, Table, build_table
from tabrisk.errors import SchemaError
from tabrisk.rng import derive_rng


@dataclass(frozen=True)
class EdgeCaseSpec:
    """Per-column sampling rules covering an entire schema."""

    schemas: tuple[ColumnSchema, ...]

    def __post_init__(self):
        missing = [s.name for s in self.schemas if s.edge is None]
        if missing:
            raise SchemaError(f"edge-case spec missing columns: {missing}")

    @classmethod
    def from_schemas(cls, schemas) -> "EdgeCaseSpec":
        return cls(schemas=tuple(schemas))


def sample_edge_cases(spec: EdgeCaseSpec, n: int, seed: int) -> Table:
    rng = derive_rng(seed, "edge-sample")
    columns = []
    for s in spec.schemas:
        if s.kind == NUMERIC:
            mu, sigma = s.edge
            columns.append(rng.normal(mu, sigma, size=n) if sigma > 0
                           else np.full(n, float(mu)))
        else:
            probs = np.array([s.edge.get(c, 0.0) for c in s.categories])
            columns.append(rng.choice(len(s.categories), size=n, p=probs).astype(np.int64))
    return build_table(spec.schemas, columns, np.ones(n, dtype=np.int8))


@dataclass(frozen=True)
class EdgeGenerator:
    """Generator-shaped wrapper so regimes can treat edge cohorts uniformly.

    Not fitted on any rows, so its training fingerprint set is empty.
    """

    kind: str
    schemas: tuple[ColumnSchema, ...]
    spec: EdgeCaseSpec
    training_fingerprints: frozenset[bytes]

    @classmethod
    def from_schemas(cls, schemas) -> "EdgeGenerator":
        return cls(kind="edge", schemas=tuple(schemas),
                   spec=EdgeCaseSpec.from_schemas(schemas),
                   training_fingerprints=frozenset())

    def sample(self, n: int, seed: int) -> Table:
        return sample_edge_cases(self.spec, n, seed)
