"""Shared generator plumbing: output validation and leakage fingerprints.

Generators are fitted on minority training rows only; they record a
fingerprint of those rows so the harness can prove no evaluation row ever
fed a generator.
"""

from __future__ import annotations

import numpy as np

from tabrisk.data import CATEGORICAL, NUMERIC, ColumnSchema, Table
from tabrisk.errors import DataError, FitError


def feature_schemas(table: Table) -> tuple[ColumnSchema, ...]:
    return table.schemas


def check_fit_rows(table: Table, minimum: int, kind: str) -> None:
    if table.n_rows < minimum:
        raise FitError(f"{kind} generator needs >= {minimum} rows, got {table.n_rows}")
    if table.missing_mask.any():
        raise DataError(f"{kind} generator requires fully imputed rows")


def validate_sample(schemas: tuple[ColumnSchema, ...], table: Table) -> None:
    """Assert schema conformance of generator output: matching kinds,
    in-range category codes, finite numerics, positive labels."""
    if table.schemas != schemas:
        raise DataError("generated table does not match the source schema")
    for s in schemas:
        col = table.column(s.name)
        if s.kind == NUMERIC:
            if not np.isfinite(col).all():
                raise DataError(f"generated column {s.name!r} has non-finite values")
        else:
            if col.size and (col.min() < 0 or col.max() >= len(s.categories)):
                raise DataError(f"generated column {s.name!r} has out-of-range categories")
    if not (table.target == 1).all():
        raise DataError("synthetic rows must carry the positive label")


def fingerprint_set(table: Table) -> frozenset[bytes]:
    return frozenset(table.row_fingerprints())


def sample(generator, n: int, seed: int) -> Table:
    """Draw n schema-conformant positive-label rows from a fitted generator."""
    if n < 0:
        raise DataError(f"sample size must be >= 0, got {n}")
    table = generator.sample(n, seed)
    validate_sample(generator.schemas, table)
    return table
