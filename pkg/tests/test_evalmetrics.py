import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabrisk.errors import DataError
from tabrisk.evalmetrics import (
    ConfusionCounts,
    auc_roc,
    avg_confidence,
    avg_entropy,
    brier,
    classification_metrics,
    cohort_summary,
    confusion_at_threshold,
    ece,
    risk_coverage,
)


def auc_bruteforce(p, y):
    """Pairwise Mann-Whitney count with ties at half credit."""
    pos = p[y == 1]
    neg = p[y == 0]
    wins = 0.0
    for a in pos:
        for b in neg:
            if a > b:
                wins += 1.0
            elif a == b:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def rc_bruteforce(p, y):
    """Prefix enumeration of the risk-coverage curve, O(n^2)."""
    conf = np.maximum(p, 1 - p)
    order = np.argsort(-conf, kind="stable")
    risks, coverages = [], []
    n = len(p)
    for k in range(1, n + 1):
        chosen = order[:k]
        err = np.mean((p[chosen] >= 0.5) != (y[chosen] == 1))
        risks.append(err)
        coverages.append(k / n)
    return np.array(coverages), np.array(risks)


class TestConfusion:
    def test_basic(self):
        c = confusion_at_threshold(np.array([0.6, 0.4]), np.array([1, 0]), 0.5)
        assert (c.tp, c.tn, c.fp, c.fn) == (1, 1, 0, 0)

    def test_majority_predictor_409(self):
        y = np.zeros(409, dtype=np.int8)
        y[:31] = 1
        c = confusion_at_threshold(np.full(409, 0.08), y, 0.5)
        assert (c.tn, c.fn, c.tp, c.fp) == (378, 31, 0, 0)

    def test_threshold_zero_everything_positive(self):
        c = confusion_at_threshold(np.array([0.0, 0.3]), np.array([0, 1]), 0.0)
        assert c.tp + c.fp == 2

    def test_empty_errors(self):
        with pytest.raises(DataError):
            confusion_at_threshold(np.array([]), np.array([]), 0.5)


class TestClassificationMetrics:
    def test_majority_signature(self):
        m = classification_metrics(ConfusionCounts(tp=0, tn=378, fp=0, fn=31))
        assert m["accuracy"] == pytest.approx(378 / 409)
        assert m["precision"] == m["recall"] == m["f1"] == 0.0

    def test_perfect(self):
        m = classification_metrics(ConfusionCounts(tp=5, tn=5, fp=0, fn=0))
        assert all(v == 1.0 for v in m.values())

    def test_kan_baseline_like(self):
        m = classification_metrics(ConfusionCounts(tp=1, tn=0, fp=0, fn=29))
        assert m["precision"] == 1.0
        assert m["recall"] == pytest.approx(1 / 30)
        assert m["f1"] == pytest.approx(2 / 31, abs=1e-3)


class TestAucRoc:
    def test_perfect_separation(self):
        assert auc_roc(np.array([0.9, 0.8, 0.1, 0.2]), np.array([1, 1, 0, 0])) == 1.0

    def test_all_ties(self):
        assert auc_roc(np.full(6, 0.3), np.array([0, 1, 0, 1, 0, 1])) == 0.5

    def test_hand_example(self):
        p = np.array([0.1, 0.35, 0.35, 0.8])
        y = np.array([0, 1, 0, 1])
        assert auc_roc(p, y) == pytest.approx(0.875)

    def test_single_class_errors(self):
        with pytest.raises(DataError):
            auc_roc(np.array([0.2, 0.4]), np.array([1, 1]))

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 51))
        p = rng.choice([0.1, 0.2, 0.5, 0.7, 0.9], size=n)
        y = np.zeros(n, dtype=np.int64)
        y[rng.permutation(n)[: int(rng.integers(1, n))]] = 1
        assert auc_roc(p, y) == pytest.approx(auc_bruteforce(p, y), abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_complement_and_monotone_invariance(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 40))
        p = rng.uniform(size=n)  # ties have measure zero
        y = np.zeros(n, dtype=np.int64)
        y[rng.permutation(n)[: int(rng.integers(1, n))]] = 1
        a = auc_roc(p, y)
        assert auc_roc(1 - p, y) == pytest.approx(1 - a, abs=1e-12)
        assert auc_roc(np.exp(3 * p), y) == pytest.approx(a, abs=1e-12)


class TestConfidenceEntropy:
    def test_half(self):
        p = np.full(4, 0.5)
        assert avg_confidence(p) == 0.5
        assert avg_entropy(p) == pytest.approx(np.log(2))

    def test_majority_signature(self):
        p = np.full(10, 0.08)
        assert avg_confidence(p) == pytest.approx(0.92)
        assert avg_entropy(p) == pytest.approx(0.2788, abs=1e-3)

    def test_certain_entropy_zero(self):
        assert avg_entropy(np.array([0.0, 1.0])) == 0.0


class TestBrier:
    def test_exact_predictions(self):
        assert brier(np.array([0.0, 1.0]), np.array([0, 1])) == 0.0

    def test_single_sample(self):
        assert brier(np.array([0.8]), np.array([1])) == pytest.approx(0.04)

    def test_majority_predictor(self):
        y = np.zeros(409)
        y[:31] = 1
        value = brier(np.full(409, 0.08), y)
        expected = (378 * 0.08**2 + 31 * 0.92**2) / 409
        assert value == pytest.approx(expected, abs=1e-12)
        assert value == pytest.approx(0.071, abs=5e-3)

    def test_multiclass_doubles(self):
        p = np.array([0.3, 0.9])
        y = np.array([0, 1])
        assert brier(p, y, multiclass=True) == pytest.approx(2 * brier(p, y), abs=1e-15)

    @given(st.floats(0.01, 0.99), st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_constant_predictor_decomposition(self, phat, seed):
        rng = np.random.default_rng(seed)
        n = 200
        y = (rng.uniform(size=n) < 0.3).astype(float)
        if y.sum() in (0, n):
            return
        pi = y.mean()
        expected = phat**2 * (1 - pi) + (1 - phat) ** 2 * pi
        assert brier(np.full(n, phat), y) == pytest.approx(expected, abs=1e-12)


class TestEce:
    def test_confident_and_correct(self):
        assert ece(np.array([1.0, 0.0]), np.array([1, 0]), bins=10) == 0.0

    def test_hand_example_two_bins(self):
        # confidences [0.6, 0.7, 0.9, 0.95], correctness [1, 0, 1, 1]
        p = np.array([0.6, 0.7, 0.9, 0.95])
        y = np.array([1, 0, 1, 1])
        assert ece(p, y, bins=2) == pytest.approx(0.0375, abs=1e-12)

    def test_single_bin(self):
        p = np.array([0.6, 0.8, 0.3])
        y = np.array([1, 0, 0])
        acc = np.mean((p >= 0.5) == (y == 1))
        conf = np.maximum(p, 1 - p).mean()
        assert ece(p, y, bins=1) == pytest.approx(abs(acc - conf))

    def test_zero_when_bins_match(self):
        p = np.array([0.8, 0.8, 0.8, 0.8, 0.8])
        y = np.array([1, 1, 1, 1, 0])
        assert ece(p, y, bins=10) == pytest.approx(0.0)


class TestRiskCoverage:
    def test_flat_zero(self):
        p = np.array([0.99, 0.98, 0.01])
        y = np.array([1, 1, 0])
        rc = risk_coverage(p, y)
        assert rc.auc_rc == 0.0
        assert np.array_equal(rc.risk, np.zeros(3))

    def test_error_at_lowest_confidence(self):
        p = np.array([0.99, 0.95, 0.9, 0.55])
        y = np.array([1, 1, 1, 0])
        rc = risk_coverage(p, y)
        cov, risk = rc_bruteforce(p, y)
        assert np.allclose(rc.coverage, cov)
        assert np.allclose(rc.risk, risk)
        assert rc.risk[-1] == pytest.approx(0.25)

    def test_confident_error_costs_more(self):
        p_tail = np.array([0.99, 0.95, 0.9, 0.55])
        y = np.array([1, 1, 1, 0])
        p_head = np.array([0.99, 0.95, 0.9, 0.55])
        y_head = np.array([0, 1, 1, 1])
        assert risk_coverage(p_head, y_head).auc_rc > risk_coverage(p_tail, y).auc_rc

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 101))
        p = rng.uniform(size=n)
        y = rng.integers(0, 2, size=n)
        rc = risk_coverage(p, y)
        cov, risk = rc_bruteforce(p, y)
        assert np.array_equal(rc.coverage, cov)
        assert np.allclose(rc.risk, risk, atol=1e-15)

    def test_full_coverage_risk_is_error_rate(self):
        rng = np.random.default_rng(3)
        p = rng.uniform(size=50)
        y = rng.integers(0, 2, size=50)
        rc = risk_coverage(p, y)
        acc = classification_metrics(confusion_at_threshold(p, y, 0.5))["accuracy"]
        assert rc.risk[-1] == pytest.approx(1 - acc, abs=1e-12)


class TestCohortSummary:
    def test_constant(self):
        s = cohort_summary(np.full(7, 0.99))
        assert s.q0 == s.q50 == s.q99 == 0.99
        assert s.std == pytest.approx(0.0, abs=1e-12)

    def test_three_values(self):
        s = cohort_summary(np.array([0.1, 0.2, 0.3]))
        assert s.q0 == pytest.approx(0.1)
        assert s.q50 == pytest.approx(0.2)
        assert s.mean == pytest.approx(0.2)

    def test_q99_nearest_rank_200(self):
        p = np.linspace(0, 1, 200)
        s = cohort_summary(p)
        assert s.q99 == pytest.approx(np.sort(p)[197])
