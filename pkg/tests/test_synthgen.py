import warnings

import numpy as np
import pytest
from scipy.stats import ks_2samp

from tabrisk.data import ColumnSchema, build_table
from tabrisk.errors import FitError, SchemaError
from tabrisk.synthgen import (
    EdgeCaseSpec,
    EdgeGenerator,
    fit_arf,
    fit_gaussian_copula,
    fit_tvae,
    sample,
    sample_edge_cases,
    validate_sample,
)
from tabrisk.synthgen.tvae import TvaeCore


def _numeric_cols(named_arrays, target=None):
    schemas = [ColumnSchema(name, "numeric") for name, _ in named_arrays]
    arrays = [a for _, a in named_arrays]
    n = len(arrays[0])
    y = np.ones(n, dtype=np.int8) if target is None else target
    return build_table(schemas, arrays, y)


class TestCopula:
    def test_marginal_recovery_ks(self):
        rng = np.random.default_rng(0)
        source = rng.gamma(2.0, 3.0, size=2000)
        gen = fit_gaussian_copula(_numeric_cols([("x", source)]))
        drawn = sample(gen, 10000, seed=1)
        assert ks_2samp(drawn.column("x"), source).statistic < 0.05

    def test_correlation_recovery(self):
        rng = np.random.default_rng(1)
        cov = [[1.0, 0.8], [0.8, 1.0]]
        xy = rng.multivariate_normal([0, 0], cov, size=2000)
        gen = fit_gaussian_copula(_numeric_cols([("x", xy[:, 0]), ("y", xy[:, 1])]))
        drawn = sample(gen, 10000, seed=2)
        rho = np.corrcoef(drawn.column("x"), drawn.column("y"))[0, 1]
        assert rho == pytest.approx(0.8, abs=0.05)

    def test_single_level_categorical(self):
        t = build_table(
            [ColumnSchema("c", "categorical", ("only",)),
             ColumnSchema("x", "numeric")],
            [np.zeros(30, dtype=np.int64), np.linspace(0, 1, 30)],
            np.ones(30, dtype=np.int8))
        gen = fit_gaussian_copula(t)
        drawn = sample(gen, 200, seed=0)
        assert (drawn.column("c") == 0).all()

    def test_identity_correlation_matches_marginals(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=3000)
        b = rng.exponential(size=3000)
        gen = fit_gaussian_copula(_numeric_cols([("a", a), ("b", b)]))
        drawn = sample(gen, 10000, seed=3)
        assert ks_2samp(drawn.column("a"), a).statistic < 0.05
        assert ks_2samp(drawn.column("b"), b).statistic < 0.05

    def test_too_few_rows(self):
        with pytest.raises(FitError):
            fit_gaussian_copula(_numeric_cols([("x", np.arange(3.0))]))

    def test_categorical_frequencies_preserved(self):
        rng = np.random.default_rng(7)
        codes = rng.choice(3, size=1000, p=[0.6, 0.3, 0.1]).astype(np.int64)
        t = build_table([ColumnSchema("c", "categorical", ("a", "b", "c"))],
                        [codes], np.ones(1000, dtype=np.int8))
        gen = fit_gaussian_copula(t)
        drawn = sample(gen, 10000, seed=4)
        freq = np.bincount(drawn.column("c"), minlength=3) / 10000
        assert np.allclose(freq, [0.6, 0.3, 0.1], atol=0.03)


class TestArf:
    def test_independent_columns_converge_round_one(self):
        rng = np.random.default_rng(3)
        t = _numeric_cols([("a", rng.normal(size=400)),
                           ("b", rng.uniform(size=400))])
        gen = fit_arf(t, seed=0)
        assert gen.rounds_run == 1
        assert gen.converged
        assert gen.oob_accuracies[0] <= 0.55

    def test_correlated_pair_preserved(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=500)
        y = x + 0.1 * rng.normal(size=500)
        t = _numeric_cols([("x", x), ("y", y)])
        gen = fit_arf(t, seed=1)
        drawn = sample(gen, 2000, seed=5)
        rho = np.corrcoef(drawn.column("x"), drawn.column("y"))[0, 1]
        naive_rho = np.corrcoef(x, y[rng.permutation(500)])[0, 1]
        assert rho > 0.5
        assert abs(naive_rho) < 0.2

    def test_sample_zero_rows(self):
        rng = np.random.default_rng(6)
        t = _numeric_cols([("x", rng.normal(size=60))])
        gen = fit_arf(t, seed=2)
        assert sample(gen, 0, seed=0).n_rows == 0

    def test_determinism(self):
        rng = np.random.default_rng(8)
        t = _numeric_cols([("x", rng.normal(size=100)),
                           ("y", rng.normal(size=100))])
        a = sample(fit_arf(t, seed=3), 100, seed=9)
        b = sample(fit_arf(t, seed=3), 100, seed=9)
        assert np.array_equal(a.column("x"), b.column("x"))
        assert np.array_equal(a.column("y"), b.column("y"))

    def test_degenerate_falls_back_to_marginals(self):
        t = _numeric_cols([("x", np.full(40, 2.5)), ("y", np.full(40, -1.0))])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            gen = fit_arf(t, seed=0)
        assert any("degenerate" in str(w.message) for w in caught)
        drawn = sample(gen, 50, seed=1)
        assert (drawn.column("x") == 2.5).all()

    def test_mixed_types_conform(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=200)
        c = (x > 0).astype(np.int64)
        t = build_table([ColumnSchema("x", "numeric"),
                         ColumnSchema("c", "categorical", ("neg", "pos"))],
                        [x, c], np.ones(200, dtype=np.int8))
        gen = fit_arf(t, seed=4)
        drawn = sample(gen, 500, seed=2)
        validate_sample(t.schemas, drawn)
        # the x<->c dependence should survive leaf-based sampling
        agree = (drawn.column("c") == (drawn.column("x") > 0)).mean()
        assert agree > 0.8


def tvae_gradient_check(core, x, eps_noise, eps=1e-6):
    _, grads = core.loss_and_grads(x, eps_noise)
    worst = 0.0
    for name, param in core.params.items():
        flat = param.reshape(-1)
        analytic = grads[name].reshape(-1)
        for i in range(flat.shape[0]):
            keep = flat[i]
            flat[i] = keep + eps
            up, _ = core.loss_and_grads(x, eps_noise)
            flat[i] = keep - eps
            down, _ = core.loss_and_grads(x, eps_noise)
            flat[i] = keep
            numeric = (up - down) / (2 * eps)
            denom = max(abs(analytic[i]), abs(numeric), 1e-7)
            worst = max(worst, abs(analytic[i] - numeric) / denom)
    return worst


class TestTvae:
    def _mixed_table(self, n=300, seed=0):
        rng = np.random.default_rng(seed)
        x = rng.normal(3.0, 2.0, size=n)
        z = rng.uniform(-1, 1, size=n)
        c = rng.choice(2, size=n, p=[0.7, 0.3]).astype(np.int64)
        return build_table(
            [ColumnSchema("x", "numeric"), ColumnSchema("z", "numeric"),
             ColumnSchema("c", "categorical", ("no", "yes"))],
            [x, z, c], np.ones(n, dtype=np.int8))

    def test_loss_decreases_over_first_ten_epochs(self):
        gen = fit_tvae(self._mixed_table(), latent_dim=4, epochs=10, seed=0)
        assert gen.loss_curve[9] < gen.loss_curve[0]

    def test_reparameterization_gradient_check(self):
        rng = np.random.default_rng(1)
        core = TvaeCore(n_numeric=2, cat_sizes=[3], latent_dim=2, rng=rng, hidden=6)
        x = np.hstack([
            rng.normal(size=(5, 2)),
            np.eye(3)[rng.integers(0, 3, size=5)],
        ])
        eps_noise = rng.standard_normal((5, 2))
        assert tvae_gradient_check(core, x, eps_noise) < 1e-3

    def test_sampled_means_close(self):
        t = self._mixed_table(n=400, seed=3)
        gen = fit_tvae(t, latent_dim=4, epochs=60, seed=1)
        drawn = sample(gen, 5000, seed=2)
        for name in ("x", "z"):
            source = t.column(name)
            assert abs(drawn.column(name).mean() - source.mean()) < 0.5 * source.std()

    def test_too_few_rows(self):
        with pytest.raises(FitError):
            fit_tvae(self._mixed_table(n=30), latent_dim=2, epochs=1, seed=0)

    def test_determinism(self):
        t = self._mixed_table(n=120, seed=5)
        a = sample(fit_tvae(t, latent_dim=3, epochs=3, seed=7), 50, seed=11)
        b = sample(fit_tvae(t, latent_dim=3, epochs=3, seed=7), 50, seed=11)
        assert np.array_equal(a.column("x"), b.column("x"))
        assert np.array_equal(a.column("c"), b.column("c"))


class TestEdge:
    def _schemas(self):
        return (
            ColumnSchema("age", "numeric", edge=(92.5, 4.33)),
            ColumnSchema("anemia", "categorical", ("no", "yes"),
                         edge={"no": 0.1, "yes": 0.9}),
        )

    def test_critical_cohort_statistics(self):
        spec = EdgeCaseSpec.from_schemas(self._schemas())
        cohort = sample_edge_cases(spec, 200, seed=0)
        assert 91.0 <= cohort.column("age").mean() <= 94.0
        anemia_frac = (cohort.column("anemia") == 1).mean()
        assert 0.84 <= anemia_frac <= 0.96
        assert (cohort.target == 1).all()

    def test_certain_category(self):
        schemas = (ColumnSchema("c", "categorical", ("a", "b"),
                                edge={"a": 0.0, "b": 1.0}),)
        cohort = sample_edge_cases(EdgeCaseSpec.from_schemas(schemas), 50, seed=1)
        assert (cohort.column("c") == 1).all()

    def test_zero_sigma_constant(self):
        schemas = (ColumnSchema("x", "numeric", edge=(7.0, 0.0)),)
        cohort = sample_edge_cases(EdgeCaseSpec.from_schemas(schemas), 30, seed=2)
        assert (cohort.column("x") == 7.0).all()

    def test_missing_column_rejected(self):
        schemas = (ColumnSchema("x", "numeric", edge=(1.0, 1.0)),
                   ColumnSchema("y", "numeric"))
        with pytest.raises(SchemaError, match="missing columns"):
            EdgeCaseSpec.from_schemas(schemas)

    def test_generator_wrapper(self):
        gen = EdgeGenerator.from_schemas(self._schemas())
        drawn = sample(gen, 100, seed=3)
        validate_sample(gen.schemas, drawn)
        assert gen.training_fingerprints == frozenset()


class TestFingerprints:
    def test_training_rows_recorded_and_disjoint_from_test(self):
        rng = np.random.default_rng(0)
        train = _numeric_cols([("x", rng.normal(size=80)),
                               ("y", rng.normal(size=80))])
        test = _numeric_cols([("x", rng.normal(size=40)),
                              ("y", rng.normal(size=40))])
        gen = fit_gaussian_copula(train)
        train_prints = set(train.row_fingerprints())
        test_prints = set(test.row_fingerprints())
        assert gen.training_fingerprints <= train_prints
        assert not (gen.training_fingerprints & test_prints)
