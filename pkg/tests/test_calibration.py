import numpy as np
import pytest

from tabrisk.calibration import (
    CalibratedModel,
    SigmoidCalibrator,
    calibrate_cv,
    calibrated_from_dict,
    calibrated_to_dict,
    fit_platt,
    probability_to_score,
)
from tabrisk.errors import DataError
from tabrisk.evalmetrics import auc_roc, ece
from tabrisk.models import LogisticHyper, fit_logistic
from tabrisk.models.logistic import _sigmoid


def platt_nll(a, b, scores, t):
    p = np.clip(_sigmoid(a * scores + b), 1e-12, 1 - 1e-12)
    return -(t * np.log(p) + (1 - t) * np.log(1 - p)).sum()


class TestFitPlatt:
    def test_recovers_identity_on_true_logits(self):
        rng = np.random.default_rng(0)
        s = rng.normal(0, 2, size=10000)
        y = (rng.uniform(size=10000) < _sigmoid(s)).astype(np.int8)
        cal = fit_platt(s, y)
        assert 0.9 <= cal.a <= 1.1
        assert -0.1 <= cal.b <= 0.1

    def test_recovers_half_slope(self):
        rng = np.random.default_rng(1)
        s = rng.normal(0, 2, size=10000)
        y = (rng.uniform(size=10000) < _sigmoid(0.5 * s)).astype(np.int8)
        cal = fit_platt(s, y)
        assert cal.a == pytest.approx(0.5, abs=0.05)

    def test_constant_scores(self):
        y = np.array([1, 0, 0, 0, 0, 0, 0, 0, 0, 0])
        cal = fit_platt(np.zeros(10), y)
        smoothed = np.where(y == 1, 2 / 3, 1 / 11).mean()
        assert cal.a == 0.0
        assert _sigmoid(cal.b) == pytest.approx(smoothed, abs=1e-6)

    def test_single_class_errors(self):
        with pytest.raises(DataError):
            fit_platt(np.array([0.1, 0.2]), np.array([1, 1]))

    @pytest.mark.parametrize("seed", range(10))
    def test_beats_grid_search(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 51))
        s = rng.normal(size=n)
        y = np.zeros(n, dtype=np.int8)
        y[rng.permutation(n)[: int(rng.integers(1, n))]] = 1
        n_pos, n_neg = int(y.sum()), int((y == 0).sum())
        t = np.where(y == 1, (n_pos + 1) / (n_pos + 2), 1 / (n_neg + 2))
        cal = fit_platt(s, y)
        ours = platt_nll(cal.a, cal.b, s, t)
        grid = min(
            platt_nll(a, b, s, t)
            for a in np.linspace(-4, 4, 81)
            for b in np.linspace(-4, 4, 81)
        )
        assert ours <= grid + 1e-3


class _FixedTransformModel:
    """Deliberately overconfident wrapper: p -> sigmoid(3 * logit(p))."""

    def __init__(self, factor=3.0):
        self.factor = factor

    def predict_proba(self, X):
        return _sigmoid(self.factor * probability_to_score(X[:, 0]))


class TestCalibrateCv:
    def _overconfident_data(self, n=5000, seed=0):
        rng = np.random.default_rng(seed)
        true_p = _sigmoid(rng.normal(0, 1.5, size=n))
        y = (rng.uniform(size=n) < true_p).astype(np.int8)
        return true_p.reshape(-1, 1), y

    def test_halves_ece_of_overconfident_model(self):
        X, y = self._overconfident_data()
        raw = _FixedTransformModel().predict_proba(X)
        before = ece(raw, y, bins=10)
        calibrated = calibrate_cv(lambda Xt, yt, s: _FixedTransformModel(), X, y,
                                  k=5, seed=0)
        after = ece(calibrated.predict_proba(X), y, bins=10)
        assert after <= 0.5 * before

    def test_member_auc_unchanged(self):
        X, y = self._overconfident_data(n=2000, seed=3)
        calibrated = calibrate_cv(lambda Xt, yt, s: _FixedTransformModel(), X, y,
                                  k=4, seed=1)
        for model, cal in calibrated.members:
            assert cal.a > 0
            raw = model.predict_proba(X)
            assert auc_roc(cal.apply(raw), y) == pytest.approx(
                auc_roc(raw, y), abs=1e-12)

    def test_outputs_strictly_inside_unit_interval(self):
        X, y = self._overconfident_data(n=500, seed=5)
        calibrated = calibrate_cv(lambda Xt, yt, s: _FixedTransformModel(), X, y,
                                  k=3, seed=2)
        p = calibrated.predict_proba(X)
        assert (p > 0).all() and (p < 1).all()

    def test_identical_members_equal_single_member(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(400, 2))
        y = (X[:, 0] > 0).astype(np.int8)
        calibrated = calibrate_cv(lambda Xt, yt, s: _FixedTransformModel(1.0),
                                  X, y, k=2, seed=0)
        single = CalibratedModel(members=(calibrated.members[0],) * 2)
        # members share the fitting-free model; calibrators differ only via folds
        a0 = calibrated.members[0][1].a
        a1 = calibrated.members[1][1].a
        assert a0 == pytest.approx(a1, rel=0.25)
        assert np.allclose(single.predict_proba(X),
                           calibrated.members[0][1].apply(
                               calibrated.members[0][0].predict_proba(X)))

    def test_requires_two_folds(self):
        X, y = self._overconfident_data(n=100, seed=1)
        with pytest.raises(DataError):
            calibrate_cv(lambda Xt, yt, s: _FixedTransformModel(), X, y, k=1, seed=0)

    def test_real_model_roundtrip_serialization(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(300, 3))
        y = (X[:, 0] + 0.5 * rng.normal(size=300) > 0).astype(np.int8)
        calibrated = calibrate_cv(
            lambda Xt, yt, s: fit_logistic(Xt, yt, LogisticHyper(), seed=s),
            X, y, k=3, seed=4)
        restored = calibrated_from_dict(calibrated_to_dict(calibrated))
        assert np.array_equal(restored.predict_proba(X), calibrated.predict_proba(X))


class TestScoreClamp:
    def test_extreme_probabilities_stay_finite(self):
        s = probability_to_score(np.array([0.0, 1.0, 0.5]))
        assert np.isfinite(s).all()
        assert s[0] == -15.0 and s[1] == 15.0 and s[2] == 0.0

    def test_monotone(self):
        p = np.linspace(0, 1, 101)
        s = probability_to_score(p)
        assert (np.diff(s) >= 0).all()

    def test_calibrator_apply_matches_score_path(self):
        cal = SigmoidCalibrator(a=0.7, b=-0.2)
        p = np.array([0.1, 0.5, 0.9])
        assert np.allclose(cal.apply(p), cal.apply_to_scores(probability_to_score(p)))
