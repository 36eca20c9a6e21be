"""Tabular data model: typed columns, CSV ingestion, stratified splitting,
and fold planning.

Tables are immutable after construction (arrays are locked) and safe to
share across workers. Numeric cells are float64 with NaN for missing;
categorical cells are int64 codes into the declared category list with -1
for missing. The target is binary {0,1} with 1 = positive (event) class.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tabrisk.errors import DataError, SchemaError
from tabrisk.rng import derive_rng

NUMERIC = "numeric"
CATEGORICAL = "categorical"

_DEFAULT_TARGET_MAPPING = {"0": 0, "1": 1}


@dataclass(frozen=True)
class ColumnSchema:
    """Declared type of one column.

    edge: optional edge-case sampling rule — (mu, sigma) for numeric
    columns, {category: probability} for categorical ones.
    """

    name: str
    kind: str
    categories: tuple[str, ...] = ()
    missing_token: str = ""
    edge: object = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if len(self.categories) < 1:
                raise SchemaError(f"column {self.name!r}: categorical needs >=1 category")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"column {self.name!r}: duplicate categories")
        elif self.categories:
            raise SchemaError(f"column {self.name!r}: numeric column cannot list categories")
        if self.edge is not None:
            _validate_edge(self)

    def code_of(self, token: str) -> int:
        try:
            return self.categories.index(token)
        except ValueError:
            raise DataError(f"unmapped categorical value {token!r} in column {self.name!r}") from None


def _validate_edge(schema: ColumnSchema) -> None:
    edge = schema.edge
    if schema.kind == NUMERIC:
        try:
            mu, sigma = edge
        except (TypeError, ValueError):
            raise SchemaError(f"column {schema.name!r}: numeric edge must be (mu, sigma)") from None
        if not np.isfinite(mu) or not np.isfinite(sigma) or sigma < 0:
            raise SchemaError(f"column {schema.name!r}: bad edge parameters {edge!r}")
    else:
        if not isinstance(edge, dict):
            raise SchemaError(f"column {schema.name!r}: categorical edge must map category -> prob")
        unknown = set(edge) - set(schema.categories)
        if unknown:
            raise SchemaError(f"column {schema.name!r}: edge probabilities for unknown {sorted(unknown)}")
        total = float(sum(edge.values()))
        if any(p < 0 for p in edge.values()) or abs(total - 1.0) > 1e-9:
            raise SchemaError(f"column {schema.name!r}: edge probabilities must be >=0 and sum to 1")


def _lock(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Table:
    """Immutable rows x typed columns with missingness mask and binary target."""

    schemas: tuple[ColumnSchema, ...]
    columns: tuple[np.ndarray, ...]
    missing_mask: np.ndarray  # (n_rows, n_cols) bool
    target: np.ndarray  # (n_rows,) int8 in {0,1}

    def __post_init__(self):
        names = [s.name for s in self.schemas]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        n = self.target.shape[0]
        if len(self.columns) != len(self.schemas):
            raise SchemaError("column/schema count mismatch")
        for s, col in zip(self.schemas, self.columns):
            if col.shape[0] != n:
                raise DataError(f"column {s.name!r} has {col.shape[0]} cells, expected {n}")
        if self.missing_mask.shape != (n, len(self.schemas)):
            raise DataError("missing mask shape mismatch")
        if not np.isin(self.target, (0, 1)).all():
            raise DataError("target must contain only 0/1")

    @property
    def n_rows(self) -> int:
        return int(self.target.shape[0])

    @property
    def n_cols(self) -> int:
        return len(self.schemas)

    @property
    def column_names(self) -> list[str]:
        return [s.name for s in self.schemas]

    def column_index(self, name: str) -> int:
        for i, s in enumerate(self.schemas):
            if s.name == name:
                return i
        raise SchemaError(f"unknown column {name!r}")

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.column_index(name)]

    def prevalence(self) -> float:
        return float(self.target.mean())

    def subset(self, indices: np.ndarray) -> "Table":
        indices = np.asarray(indices)
        return Table(
            schemas=self.schemas,
            columns=tuple(_lock(col[indices]) for col in self.columns),
            missing_mask=_lock(self.missing_mask[indices]),
            target=_lock(self.target[indices]),
        )

    def minority_rows(self) -> "Table":
        return self.subset(np.flatnonzero(self.target == 1))

    def row_fingerprints(self) -> list[bytes]:
        """Per-row sha256 digest of the cell content (target included)."""
        cols = [np.ascontiguousarray(c, dtype=np.float64 if s.kind == NUMERIC else np.int64)
                for s, c in zip(self.schemas, self.columns)]
        out = []
        for i in range(self.n_rows):
            h = hashlib.sha256()
            for col in cols:
                h.update(col[i].tobytes())
            h.update(bytes([int(self.target[i])]))
            out.append(h.digest())
        return out


def build_table(schemas: Sequence[ColumnSchema], columns: Sequence[np.ndarray],
                target: np.ndarray) -> Table:
    """Assemble a Table, deriving the missing mask from NaN / -1 cells."""
    schemas = tuple(schemas)
    cast = []
    masks = []
    for s, col in zip(schemas, columns):
        if s.kind == NUMERIC:
            arr = np.asarray(col, dtype=np.float64)
            masks.append(np.isnan(arr))
        else:
            arr = np.asarray(col, dtype=np.int64)
            if arr.size and (arr.max(initial=-1) >= len(s.categories) or arr.min(initial=0) < -1):
                raise DataError(f"column {s.name!r}: category code out of range")
            masks.append(arr == -1)
        cast.append(_lock(arr))
    mask = _lock(np.column_stack(masks) if masks else np.zeros((len(target), 0), bool))
    return Table(schemas=schemas, columns=tuple(cast),
                 missing_mask=mask, target=_lock(np.asarray(target, dtype=np.int8)))


def concat_tables(first: Table, second: Table) -> Table:
    """Row-wise concatenation; schemas must match exactly."""
    if first.schemas != second.schemas:
        raise SchemaError("cannot concatenate tables with different schemas")
    return Table(
        schemas=first.schemas,
        columns=tuple(_lock(np.concatenate([a, b])) for a, b in zip(first.columns, second.columns)),
        missing_mask=_lock(np.vstack([first.missing_mask, second.missing_mask])),
        target=_lock(np.concatenate([first.target, second.target])),
    )


def load_csv(path, schema: Sequence[ColumnSchema], target_name: str,
             target_mapping: dict[str, int] | None = None) -> Table:
    """Read a comma-delimited UTF-8 file with a header row into a Table.

    Cells equal to the column's missing token are recorded as missing; the
    target column must map to {0,1} (default tokens "0"/"1") and may not be
    missing. Row order is preserved.
    """
    schema = list(schema)
    mapping = dict(_DEFAULT_TARGET_MAPPING if target_mapping is None else target_mapping)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)

    declared = {s.name for s in schema} | {target_name}
    for name in header:
        if name not in declared:
            raise SchemaError(f"unknown column {name!r} in {path}")
    positions = {name: i for i, name in enumerate(header)}
    for s in schema:
        if s.name not in positions:
            raise SchemaError(f"column {s.name!r} missing from {path}")
    if target_name not in positions:
        raise SchemaError(f"target column {target_name!r} missing from {path}")

    n = len(rows)
    width = len(header)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: ragged row {r + 2} ({len(row)} cells, expected {width})")

    columns = []
    for s in schema:
        j = positions[s.name]
        if s.kind == NUMERIC:
            col = np.full(n, np.nan)
            for r, row in enumerate(rows):
                tok = row[j]
                if tok == s.missing_token:
                    continue
                try:
                    col[r] = float(tok)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {tok!r} in column {s.name!r}, row {r + 2}"
                    ) from None
        else:
            col = np.full(n, -1, dtype=np.int64)
            for r, row in enumerate(rows):
                tok = row[j]
                if tok != s.missing_token:
                    col[r] = s.code_of(tok)
        columns.append(col)

    j = positions[target_name]
    target = np.empty(n, dtype=np.int8)
    for r, row in enumerate(rows):
        tok = row[j]
        if tok not in mapping or mapping[tok] not in (0, 1):
            raise DataError(f"{path}: non-binary target value {tok!r} in row {r + 2}")
        target[r] = mapping[tok]

    return build_table(schema, columns, target)


def write_csv(table: Table, path, target_name: str = "target") -> None:
    """Inverse of load_csv for the bundled schema conventions."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.column_names + [target_name])
        for i in range(table.n_rows):
            row = []
            for s, col in zip(table.schemas, table.columns):
                if table.missing_mask[i, table.column_index(s.name)]:
                    row.append(s.missing_token)
                elif s.kind == NUMERIC:
                    row.append(repr(float(col[i])))
                else:
                    row.append(s.categories[int(col[i])])
            row.append(str(int(table.target[i])))
            writer.writerow(row)


def stratified_split(table: Table, test_frac: float, seed: int) -> tuple[Table, Table]:
    """Split rows into (train, test) preserving the class mix.

    Test size is round(n * test_frac). Minority-class test counts are
    floored at n_c * test_frac; the majority class absorbs the remainder,
    which reproduces a 158-positive / 2044-row table splitting to 127/31
    positives at test_frac 0.2.
    """
    if not 0.0 < test_frac < 1.0:
        raise DataError(f"test_frac must be in (0,1), got {test_frac}")
    y = table.target
    n = table.n_rows
    counts = {c: int((y == c).sum()) for c in (0, 1)}
    if counts[0] == 0 or counts[1] == 0:
        raise DataError("stratified split requires both classes present")

    n_test = int(np.floor(n * test_frac + 0.5))
    majority = 0 if counts[0] >= counts[1] else 1
    minority = 1 - majority
    test_counts = {minority: int(np.floor(counts[minority] * test_frac))}
    test_counts[majority] = n_test - test_counts[minority]
    for c in (0, 1):
        if test_counts[c] < 1 or test_counts[c] >= counts[c]:
            raise DataError(
                f"class {c} would receive an empty side (test {test_counts[c]} of {counts[c]})"
            )

    test_idx = []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        perm = derive_rng(seed, "split", c).permutation(idx)
        test_idx.append(perm[: test_counts[c]])
    test_mask = np.zeros(n, dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    return table.subset(np.flatnonzero(~test_mask)), table.subset(np.flatnonzero(test_mask))


@dataclass(frozen=True)
class FoldPlan:
    """Cross-validation fold assignment; folds partition the row set."""

    k: int
    assignments: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.k < 2:
            raise DataError(f"k must be >= 2, got {self.k}")
        a = self.assignments
        if a.min() < 0 or a.max() >= self.k:
            raise DataError("fold index out of range")

    def eval_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def stratified_fold_assignments(y: np.ndarray, k: int, seed: int, *tags) -> np.ndarray:
    """Per-row fold index; fold sizes and per-class counts differ by <= 1.

    Per class, shuffled rows are dealt into folds with a rotating start so
    the per-class remainders spread over different folds.
    """
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    n = y.shape[0]
    if k > n:
        raise DataError(f"k ({k}) exceeds row count ({n})")
    assignments = np.full(n, -1, dtype=np.int32)
    start = 0
    for c in (1, 0):
        idx = np.flatnonzero(y == c)
        perm = derive_rng(seed, "kfold", *tags, c).permutation(idx)
        n_c = idx.shape[0]
        base, rem = divmod(n_c, k)
        sizes = np.full(k, base, dtype=np.int64)
        for r in range(rem):
            sizes[(start + r) % k] += 1
        start = (start + rem) % k
        stop = np.cumsum(sizes)
        begin = stop - sizes
        for f in range(k):
            assignments[perm[begin[f]:stop[f]]] = f
    return assignments


def stratified_kfold(table: Table, k: int, seed: int) -> FoldPlan:
    """Deterministic stratified k-fold plan for a table."""
    return FoldPlan(k=k, assignments=_lock(
        stratified_fold_assignments(table.target, k, seed)))


# ---------------------------------------------------------------------------
# Schema JSON document (shared by the CLI and the generators)

def schema_from_json(doc: dict) -> tuple[list[ColumnSchema], str, dict[str, int]]:
    """Parse the schema document: columns, target name, target token mapping.

    Document layout:
      {"columns": [{"name", "kind", "categories"?, "missing_token"?,
                    "edge": {"mu","sigma"} | {"probs": {...}} | null}, ...],
       "target": {"name": ..., "mapping": {token: 0|1}?}}
    """
    try:
        raw_cols = doc["columns"]
        target = doc["target"]
        target_name = target["name"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"schema document missing field: {exc}") from None
    mapping = {str(k): int(v) for k, v in target.get("mapping", _DEFAULT_TARGET_MAPPING).items()}
    schemas = []
    for c in raw_cols:
        edge = c.get("edge")
        if edge is not None:
            if "probs" in edge:
                edge = {str(k): float(v) for k, v in edge["probs"].items()}
            else:
                edge = (float(edge["mu"]), float(edge["sigma"]))
        schemas.append(ColumnSchema(
            name=c["name"],
            kind=c["kind"],
            categories=tuple(c.get("categories", ())),
            missing_token=c.get("missing_token", ""),
            edge=edge,
        ))
    return schemas, target_name, mapping


def schema_to_json(schemas: Sequence[ColumnSchema], target_name: str,
                   target_mapping: dict[str, int] | None = None) -> dict:
    cols = []
    for s in schemas:
        entry: dict = {"name": s.name, "kind": s.kind}
        if s.kind == CATEGORICAL:
            entry["categories"] = list(s.categories)
        if s.missing_token != "":
            entry["missing_token"] = s.missing_token
        if s.edge is not None:
            if s.kind == NUMERIC:
                entry["edge"] = {"mu": s.edge[0], "sigma": s.edge[1]}
            else:
                entry["edge"] = {"probs": dict(s.edge)}
        cols.append(entry)
    doc = {"columns": cols, "target": {"name": target_name}}
    if target_mapping is not None:
        doc["target"]["mapping"] = dict(target_mapping)
    return doc


def load_schema_file(path) -> tuple[list[ColumnSchema], str, dict[str, int]]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return schema_from_json(doc)
