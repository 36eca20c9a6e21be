import numpy as np
import pytest

from tabrisk.data import (
    ColumnSchema,
    Table,
    build_table,
    concat_tables,
    load_csv,
    schema_from_json,
    schema_to_json,
    stratified_kfold,
    stratified_split,
    write_csv,
)
from tabrisk.errors import DataError, SchemaError


def _numeric_table(n, n_pos, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    y = np.zeros(n, dtype=np.int8)
    y[rng.permutation(n)[:n_pos]] = 1
    return build_table([ColumnSchema("x", "numeric")], [x], y)


class TestLoadCsv:
    def test_empty_token_is_missing(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y\n1,0\n,0\n3,1\n")
        t = load_csv(path, [ColumnSchema("x", "numeric")], "y")
        assert t.missing_mask[:, 0].tolist() == [False, True, False]
        assert np.isnan(t.column("x")[1])

    def test_unmapped_categorical_value(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("c,y\nA,0\nC,1\n")
        schema = [ColumnSchema("c", "categorical", ("A", "B"))]
        with pytest.raises(DataError, match="unmapped categorical value"):
            load_csv(path, schema, "y")

    def test_unknown_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,z,y\n1,2,0\n")
        with pytest.raises(SchemaError, match="unknown column"):
            load_csv(path, [ColumnSchema("x", "numeric")], "y")

    def test_non_binary_target(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y\n1,2\n")
        with pytest.raises(DataError, match="non-binary target"):
            load_csv(path, [ColumnSchema("x", "numeric")], "y")

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y\n1,0\n1\n")
        with pytest.raises(DataError, match="ragged row"):
            load_csv(path, [ColumnSchema("x", "numeric")], "y")

    def test_roundtrip_preserves_rows(self, tmp_path):
        schema = [
            ColumnSchema("x", "numeric"),
            ColumnSchema("c", "categorical", ("no", "yes")),
        ]
        t = build_table(schema, [np.array([1.5, np.nan, -2.0]), np.array([0, 1, -1])],
                        np.array([0, 1, 0]))
        path = tmp_path / "t.csv"
        write_csv(t, path, target_name="y")
        back = load_csv(path, schema, "y")
        assert np.array_equal(back.missing_mask, t.missing_mask)
        assert np.array_equal(back.target, t.target)
        assert np.allclose(back.column("x"), t.column("x"), equal_nan=True)

    def test_benchmark_counts(self, benchmark_paths):
        from tabrisk.data import load_schema_file

        schemas, target, mapping = load_schema_file(benchmark_paths["schema"])
        t = load_csv(benchmark_paths["data"], schemas, target, mapping)
        assert t.n_rows == 2044
        assert int(t.target.sum()) == 158
        assert t.prevalence() == pytest.approx(158 / 2044)


class TestStratifiedSplit:
    def test_paper_counts(self):
        t = _numeric_table(2044, 158)
        train, test = stratified_split(t, 0.2, seed=7)
        assert (train.n_rows, int(train.target.sum())) == (1635, 127)
        assert (test.n_rows, int(test.target.sum())) == (409, 31)

    def test_single_class_errors(self):
        t = _numeric_table(10, 0)
        with pytest.raises(DataError, match="both classes"):
            stratified_split(t, 0.2, seed=0)

    def test_balanced_ten_rows(self):
        t = _numeric_table(10, 5)
        train, test = stratified_split(t, 0.5, seed=3)
        assert train.n_rows == test.n_rows == 5
        assert abs(int(train.target.sum()) - int(test.target.sum())) <= 1

    @pytest.mark.parametrize("seed", range(5))
    def test_partition_and_prevalence(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(40, 400))
        n_pos = int(rng.integers(8, n // 2))
        frac = float(rng.uniform(0.15, 0.5))
        t = _numeric_table(n, n_pos, seed=seed)
        train, test = stratified_split(t, frac, seed=seed)
        assert train.n_rows + test.n_rows == n
        merged = np.sort(np.concatenate([train.column("x"), test.column("x")]))
        assert np.array_equal(merged, np.sort(t.column("x")))
        prev = t.prevalence()
        assert abs(test.prevalence() - prev) <= 1.0 / test.n_rows + 1e-12


class TestStratifiedKFold:
    def test_singleton_folds(self):
        t = _numeric_table(10, 5)
        plan = stratified_kfold(t, 10, seed=0)
        sizes = np.bincount(plan.assignments, minlength=10)
        assert (sizes == 1).all()

    def test_positive_spread_127_over_10(self):
        t = _numeric_table(1635, 127)
        plan = stratified_kfold(t, 10, seed=1)
        pos_per_fold = np.array([
            int(t.target[plan.eval_indices(f)].sum()) for f in range(10)
        ])
        assert sorted(pos_per_fold.tolist()).count(13) == 7
        assert set(pos_per_fold.tolist()) <= {12, 13}
        sizes = np.bincount(plan.assignments, minlength=10)
        assert sizes.max() - sizes.min() <= 1

    def test_determinism(self):
        t = _numeric_table(123, 17)
        a = stratified_kfold(t, 5, seed=42)
        b = stratified_kfold(t, 5, seed=42)
        assert np.array_equal(a.assignments, b.assignments)

    def test_k_exceeding_rows(self):
        t = _numeric_table(5, 2)
        with pytest.raises(DataError, match="exceeds"):
            stratified_kfold(t, 6, seed=0)


class TestTable:
    def test_subset_and_concat(self):
        t = _numeric_table(20, 6)
        a = t.subset(np.arange(10))
        b = t.subset(np.arange(10, 20))
        merged = concat_tables(a, b)
        assert np.array_equal(merged.column("x"), t.column("x"))
        assert np.array_equal(merged.target, t.target)

    def test_columns_are_immutable(self):
        t = _numeric_table(5, 2)
        with pytest.raises(ValueError):
            t.column("x")[0] = 99.0

    def test_fingerprints_distinguish_rows(self):
        t = _numeric_table(30, 9)
        prints = t.row_fingerprints()
        assert len(set(prints)) == 30

    def test_schema_json_roundtrip(self):
        schemas = [
            ColumnSchema("age", "numeric", edge=(92.5, 4.33)),
            ColumnSchema("anemia", "categorical", ("no", "yes"),
                         edge={"no": 0.1, "yes": 0.9}),
        ]
        doc = schema_to_json(schemas, "death", {"0": 0, "1": 1})
        back, target, mapping = schema_from_json(doc)
        assert back == schemas
        assert target == "death"
        assert mapping == {"0": 0, "1": 1}
