"""Fit-on-train-only preprocessing.

Stages: sparse-column removal, mode/chained-regression imputation, all-level
one-hot encoding, standardization, and ANOVA-F feature selection. A fitted
pipeline never reads statistics from the tables it transforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tabrisk.data import CATEGORICAL, NUMERIC, ColumnSchema, Table, build_table
from tabrisk.errors import DataError, FitError

RIDGE_LAMBDA = 1e-3


def drop_sparse_columns(table: Table, max_missing: int) -> Table:
    """Remove columns whose missing-cell count exceeds max_missing."""
    if max_missing < 0:
        raise DataError(f"max_missing must be >= 0, got {max_missing}")
    counts = table.missing_mask.sum(axis=0)
    keep = [i for i in range(table.n_cols) if counts[i] <= max_missing]
    if not keep:
        raise DataError("sparse-column removal would drop every column")
    if len(keep) == table.n_cols:
        return table
    return Table(
        schemas=tuple(table.schemas[i] for i in keep),
        columns=tuple(table.columns[i] for i in keep),
        missing_mask=table.missing_mask[:, keep],
        target=table.target,
    )


@dataclass(frozen=True)
class ImputeModel:
    """Imputation state fitted on training rows.

    Categorical gaps take the training mode. Numeric gaps start at the
    training mean and are refined by chained ridge regressions (fixed
    column order) on the other numeric columns.
    """

    modes: dict[str, int]
    means: dict[str, float]
    coefs: dict[str, np.ndarray]  # intercept followed by one weight per other numeric column
    numeric_order: tuple[str, ...]
    rounds: int
    tol: float

    def apply(self, table: Table) -> Table:
        cols = {s.name: np.array(table.column(s.name)) for s in table.schemas}
        for s in table.schemas:
            gap = table.missing_mask[:, table.column_index(s.name)]
            if s.kind == CATEGORICAL:
                cols[s.name][gap] = self.modes[s.name]
            else:
                cols[s.name][gap] = self.means[s.name]
        gaps = {name: table.missing_mask[:, table.column_index(name)]
                for name in self.numeric_order}
        for _ in range(self.rounds):
            max_change = 0.0
            for name in self.numeric_order:
                gap = gaps[name]
                if not gap.any():
                    continue
                pred = self._predict(name, cols, gap)
                change = np.abs(pred - cols[name][gap]).max() if pred.size else 0.0
                max_change = max(max_change, float(change))
                cols[name][gap] = pred
            if max_change < self.tol:
                break
        return build_table(table.schemas, [cols[s.name] for s in table.schemas], table.target)

    def _predict(self, name: str, cols: dict[str, np.ndarray], rows: np.ndarray) -> np.ndarray:
        return _predict_chain(self.coefs[name], name, self.numeric_order, cols, rows)


def fit_imputer(table: Table, rounds: int = 10, tol: float = 1e-3) -> ImputeModel:
    if rounds < 0:
        raise DataError(f"rounds must be >= 0, got {rounds}")
    modes: dict[str, int] = {}
    means: dict[str, float] = {}
    numeric_order = tuple(s.name for s in table.schemas if s.kind == NUMERIC)
    cols: dict[str, np.ndarray] = {}
    gaps: dict[str, np.ndarray] = {}
    for s in table.schemas:
        raw = table.column(s.name)
        gap = table.missing_mask[:, table.column_index(s.name)]
        if gap.all():
            raise FitError(f"column {s.name!r} is entirely missing")
        work = np.array(raw)
        if s.kind == CATEGORICAL:
            observed = work[~gap].astype(np.int64)
            counts = np.bincount(observed, minlength=len(s.categories))
            modes[s.name] = int(np.argmax(counts))
            work[gap] = modes[s.name]
        else:
            means[s.name] = float(work[~gap].mean())
            work[gap] = means[s.name]
            gaps[s.name] = gap
        cols[s.name] = work

    coefs: dict[str, np.ndarray] = {}
    for _ in range(max(rounds, 1)):
        max_change = 0.0
        for name in numeric_order:
            observed = ~gaps[name]
            coefs[name] = _ridge_fit(name, numeric_order, cols, observed)
            if rounds == 0 or not gaps[name].any():
                continue
            pred = _predict_chain(coefs[name], name, numeric_order, cols, gaps[name])
            change = np.abs(pred - cols[name][gaps[name]]).max() if pred.size else 0.0
            max_change = max(max_change, float(change))
            cols[name][gaps[name]] = pred
        if rounds == 0 or max_change < tol:
            break
    return ImputeModel(modes=modes, means=means, coefs=coefs,
                       numeric_order=numeric_order, rounds=rounds, tol=tol)


def _predict_chain(beta: np.ndarray, name: str, numeric_order, cols,
                   rows: np.ndarray) -> np.ndarray:
    others = [o for o in numeric_order if o != name]
    out = np.full(int(rows.sum()), beta[0])
    for j, other in enumerate(others):
        out += beta[1 + j] * cols[other][rows]
    return out


def _ridge_fit(name: str, numeric_order, cols, observed) -> np.ndarray:
    others = [o for o in numeric_order if o != name]
    y = cols[name][observed]
    if not others or y.size == 0:
        return np.array([float(y.mean()) if y.size else 0.0])
    X = np.column_stack([np.ones(y.size)] + [cols[o][observed] for o in others])
    penalty = RIDGE_LAMBDA * np.eye(X.shape[1])
    penalty[0, 0] = 0.0
    beta = np.linalg.solve(X.T @ X + penalty, X.T @ y)
    return beta


def impute(table: Table, rounds: int = 10, tol: float = 1e-3) -> Table:
    """Fill every missing cell of a table using statistics fitted on it."""
    return fit_imputer(table, rounds=rounds, tol=tol).apply(table)


@dataclass(frozen=True)
class EncoderMap:
    """Deterministic feature layout: one slot per numeric column, one
    indicator per declared category for categorical columns (no level
    dropped, so importance can aggregate per source column)."""

    slots: tuple[tuple[str, str | None], ...]  # (source column, category or None)

    @property
    def width(self) -> int:
        return len(self.slots)

    def slot_names(self) -> list[str]:
        return [src if cat is None else f"{src}={cat}" for src, cat in self.slots]

    def source_columns(self) -> list[str]:
        seen: list[str] = []
        for src, _ in self.slots:
            if src not in seen:
                seen.append(src)
        return seen


def encoder_for(schemas: tuple[ColumnSchema, ...]) -> EncoderMap:
    slots: list[tuple[str, str | None]] = []
    for s in schemas:
        if s.kind == NUMERIC:
            slots.append((s.name, None))
        else:
            slots.extend((s.name, c) for c in s.categories)
    return EncoderMap(slots=tuple(slots))


def one_hot_encode(table: Table, encoder: EncoderMap | None = None) -> np.ndarray:
    """Expand a fully-observed table into a float feature matrix."""
    if table.missing_mask.any():
        raise DataError("one-hot encoding requires a fully imputed table")
    encoder = encoder or encoder_for(table.schemas)
    out = np.empty((table.n_rows, encoder.width))
    for j, (src, cat) in enumerate(encoder.slots):
        col = table.column(src)
        if cat is None:
            out[:, j] = col
        else:
            code = table.schemas[table.column_index(src)].categories.index(cat)
            out[:, j] = (col == code).astype(np.float64)
    return out


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray  # zero-variance features carry std 1 and a flag
    zero_variance: np.ndarray


def fit_scaler(matrix: np.ndarray) -> Scaler:
    """Per-feature population mean/std from the training matrix."""
    if matrix.size == 0:
        raise DataError("cannot fit a scaler on an empty matrix")
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    flat = std == 0.0
    std = np.where(flat, 1.0, std)
    return Scaler(mean=mean, std=std, zero_variance=flat)


def apply_scaler(scaler: Scaler, matrix: np.ndarray) -> np.ndarray:
    return (matrix - scaler.mean) / scaler.std


@dataclass(frozen=True)
class AnovaScore:
    feature: int
    f_value: float
    ms_between: float
    ms_within: float
    degenerate: bool = False


def anova_f_scores(matrix: np.ndarray, labels: np.ndarray) -> list[AnovaScore]:
    """Two-group ANOVA F per feature: between-group over within-group mean
    square. A zero within-group mean square flags the score as degenerate
    (F infinite unless the between-group term is zero too)."""
    labels = np.asarray(labels)
    g1 = labels == 1
    g0 = ~g1
    n1, n0 = int(g1.sum()), int(g0.sum())
    if n1 == 0 or n0 == 0:
        raise DataError("ANOVA needs both classes present")
    n = n1 + n0
    scores = []
    grand = matrix.mean(axis=0)
    for j in range(matrix.shape[1]):
        x = matrix[:, j]
        m1, m0 = x[g1].mean(), x[g0].mean()
        ms_b = (n1 * (m1 - grand[j]) ** 2 + n0 * (m0 - grand[j]) ** 2) / (2 - 1)
        ss_w = ((x[g1] - m1) ** 2).sum() + ((x[g0] - m0) ** 2).sum()
        ms_w = ss_w / (n - 2)
        if ms_w == 0.0:
            f = np.inf if ms_b > 0 else 0.0
            scores.append(AnovaScore(j, float(f), float(ms_b), 0.0, degenerate=True))
        else:
            scores.append(AnovaScore(j, float(ms_b / ms_w), float(ms_b), float(ms_w)))
    return scores


def select_top_k(scores: list[AnovaScore], k: int) -> list[int]:
    """Indices of the k largest F values, descending, ties to lower index."""
    if not 1 <= k <= len(scores):
        raise DataError(f"k must be in [1, {len(scores)}], got {k}")
    order = sorted(scores, key=lambda s: (-s.f_value, s.feature))
    return [s.feature for s in order[:k]]


@dataclass(frozen=True)
class FittedPipeline:
    """Full preprocessing state fitted on one training table."""

    kept_schemas: tuple[ColumnSchema, ...]
    imputer: ImputeModel
    encoder: EncoderMap
    scaler: Scaler
    scores: tuple[AnovaScore, ...]
    selected: tuple[int, ...]  # encoder slot indices, descending F
    feature_names: tuple[str, ...] = field(default=())

    def transform(self, table: Table) -> np.ndarray:
        kept = [s.name for s in self.kept_schemas]
        sub = _project(table, kept)
        imputed = self.imputer.apply(sub)
        matrix = one_hot_encode(imputed, self.encoder)
        return apply_scaler(self.scaler, matrix)[:, list(self.selected)]

    def impute_table(self, table: Table) -> Table:
        """Kept columns of a table with gaps filled (schema space); this is
        what generators are fitted on."""
        return self.imputer.apply(_project(table, [s.name for s in self.kept_schemas]))

    def feature_groups(self) -> dict[str, list[int]]:
        """Source column -> positions in the transformed matrix (one-hot
        slots grouped so importance can permute them jointly)."""
        groups: dict[str, list[int]] = {}
        for pos, slot in enumerate(self.selected):
            src, _ = self.encoder.slots[slot]
            groups.setdefault(src, []).append(pos)
        return groups

    @property
    def n_features(self) -> int:
        return len(self.selected)


def pipeline_to_dict(pipe: FittedPipeline) -> dict:
    from tabrisk.data import schema_to_json

    return {
        "format_version": 1,
        "kept_schemas": schema_to_json(pipe.kept_schemas, "_")["columns"],
        "imputer": {
            "modes": dict(pipe.imputer.modes),
            "means": dict(pipe.imputer.means),
            "coefs": {k: v.tolist() for k, v in pipe.imputer.coefs.items()},
            "numeric_order": list(pipe.imputer.numeric_order),
            "rounds": pipe.imputer.rounds,
            "tol": pipe.imputer.tol,
        },
        "encoder_slots": [list(slot) for slot in pipe.encoder.slots],
        "scaler": {
            "mean": pipe.scaler.mean.tolist(),
            "std": pipe.scaler.std.tolist(),
            "zero_variance": pipe.scaler.zero_variance.tolist(),
        },
        "scores": [
            {"feature": s.feature, "f_value": None if np.isinf(s.f_value) else s.f_value,
             "ms_between": s.ms_between, "ms_within": s.ms_within,
             "degenerate": s.degenerate}
            for s in pipe.scores
        ],
        "selected": list(pipe.selected),
        "feature_names": list(pipe.feature_names),
    }


def pipeline_from_dict(doc: dict) -> FittedPipeline:
    from tabrisk.data import schema_from_json

    schemas, _, _ = schema_from_json({"columns": doc["kept_schemas"],
                                      "target": {"name": "_"}})
    imp = doc["imputer"]
    imputer = ImputeModel(
        modes={k: int(v) for k, v in imp["modes"].items()},
        means={k: float(v) for k, v in imp["means"].items()},
        coefs={k: np.asarray(v, dtype=np.float64) for k, v in imp["coefs"].items()},
        numeric_order=tuple(imp["numeric_order"]),
        rounds=int(imp["rounds"]),
        tol=float(imp["tol"]),
    )
    scaler = Scaler(
        mean=np.asarray(doc["scaler"]["mean"], dtype=np.float64),
        std=np.asarray(doc["scaler"]["std"], dtype=np.float64),
        zero_variance=np.asarray(doc["scaler"]["zero_variance"], dtype=bool),
    )
    scores = tuple(
        AnovaScore(int(s["feature"]),
                   np.inf if s["f_value"] is None else float(s["f_value"]),
                   float(s["ms_between"]), float(s["ms_within"]),
                   bool(s["degenerate"]))
        for s in doc["scores"]
    )
    return FittedPipeline(
        kept_schemas=tuple(schemas),
        imputer=imputer,
        encoder=EncoderMap(slots=tuple((src, cat) for src, cat in doc["encoder_slots"])),
        scaler=scaler,
        scores=scores,
        selected=tuple(int(i) for i in doc["selected"]),
        feature_names=tuple(doc["feature_names"]),
    )


def _project(table: Table, names: list[str]) -> Table:
    idx = [table.column_index(n) for n in names]
    return Table(
        schemas=tuple(table.schemas[i] for i in idx),
        columns=tuple(table.columns[i] for i in idx),
        missing_mask=table.missing_mask[:, idx],
        target=table.target,
    )


def fit_pipeline(train: Table, *, max_missing: int | None = None,
                 max_missing_frac: float | None = None,
                 impute_rounds: int = 10, impute_tol: float = 1e-3,
                 select_k: int | None = None) -> FittedPipeline:
    """Fit the whole preprocessing chain on training rows only.

    The sparse threshold may be given as an absolute count or a fraction of
    the training rows; when both are omitted no column is dropped.
    """
    if max_missing is None:
        if max_missing_frac is not None:
            max_missing = int(np.floor(max_missing_frac * train.n_rows))
        else:
            max_missing = train.n_rows
    kept = drop_sparse_columns(train, max_missing)
    imputer = fit_imputer(kept, rounds=impute_rounds, tol=impute_tol)
    imputed = imputer.apply(kept)
    encoder = encoder_for(kept.schemas)
    matrix = one_hot_encode(imputed, encoder)
    scaler = fit_scaler(matrix)
    scaled = apply_scaler(scaler, matrix)
    scores = anova_f_scores(scaled, train.target)
    k = len(scores) if select_k is None else select_k
    selected = tuple(select_top_k(scores, k))
    names = encoder.slot_names()
    return FittedPipeline(
        kept_schemas=kept.schemas,
        imputer=imputer,
        encoder=encoder,
        scaler=scaler,
        scores=tuple(scores),
        selected=selected,
        feature_names=tuple(names[i] for i in selected),
    )
