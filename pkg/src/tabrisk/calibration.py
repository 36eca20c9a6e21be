"""Cross-validated sigmoid (Platt) calibration around any classifier.

Raw probabilities are turned into scores via a clamped logit (tree models
emit probabilities, not margins); a two-parameter sigmoid is fitted on
held-out scores by Newton iterations against likelihood-smoothed targets.
A calibrated model averages its members' calibrated probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from tabrisk.data import stratified_fold_assignments
from tabrisk.errors import DataError
from tabrisk.models import model_from_dict, model_to_dict
from tabrisk.models.logistic import _sigmoid
from tabrisk.rng import derive_seed_sequence

SCORE_CLAMP = 15.0
DEFAULT_CAL_FOLDS = 5


def probability_to_score(p: np.ndarray) -> np.ndarray:
    """Clamped logit; keeps tree-model outputs of exactly 0 or 1 finite."""
    p = np.asarray(p, dtype=np.float64)
    z = np.empty_like(p)
    lo = 1.0 / (1.0 + np.exp(SCORE_CLAMP))
    clipped = np.clip(p, lo, 1.0 - lo)
    z[:] = np.log(clipped / (1.0 - clipped))
    return np.clip(z, -SCORE_CLAMP, SCORE_CLAMP)


@dataclass(frozen=True)
class SigmoidCalibrator:
    a: float
    b: float

    def apply_to_scores(self, scores: np.ndarray) -> np.ndarray:
        return _sigmoid(self.a * np.asarray(scores, dtype=np.float64) + self.b)

    def apply(self, probabilities: np.ndarray) -> np.ndarray:
        return self.apply_to_scores(probability_to_score(probabilities))


def fit_platt(scores: np.ndarray, y: np.ndarray, *, tol: float = 1e-8,
              max_iters: int = 100) -> SigmoidCalibrator:
    """Maximum-likelihood sigmoid against smoothed targets.

    Positive targets become (N+ + 1)/(N+ + 2) and negatives 1/(N- + 2);
    damped Newton runs until the gradient norm drops below tol. Constant
    scores leave the slope unidentifiable, so it pins a = 0 and fits the
    intercept alone.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("Platt scaling needs both classes present")
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    slope_free = bool(s.max() > s.min())
    theta = np.array([0.0, float(np.log(t.mean() / (1.0 - t.mean())))])

    def nll(th):
        p = _sigmoid(th[0] * s + th[1])
        p = np.clip(p, 1e-300, 1.0 - 1e-16)
        return float(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)).sum())

    current = nll(theta)
    for _ in range(max_iters):
        p = _sigmoid(theta[0] * s + theta[1])
        resid = p - t
        grad = np.array([float(resid @ s), float(resid.sum())])
        if not slope_free:
            grad[0] = 0.0
        if np.linalg.norm(grad) < tol:
            break
        w = p * (1.0 - p)
        if slope_free:
            hess = np.array([
                [float(w @ (s * s)), float(w @ s)],
                [float(w @ s), float(w.sum())],
            ]) + 1e-12 * np.eye(2)
            step = np.linalg.solve(hess, grad)
        else:
            step = np.array([0.0, grad[1] / (float(w.sum()) + 1e-12)])
        scale = 1.0
        for _ in range(50):
            candidate = theta - scale * step
            new = nll(candidate)
            if new <= current:
                break
            scale *= 0.5
        theta = theta - scale * step
        current = nll(theta)
    return SigmoidCalibrator(a=float(theta[0]), b=float(theta[1]))


@dataclass(frozen=True)
class CalibratedModel:
    """Ensemble of (member model, its sigmoid) pairs from internal k-fold
    splits; the prediction is the mean of calibrated member probabilities."""

    members: tuple[tuple[object, SigmoidCalibrator], ...]

    def __post_init__(self):
        if len(self.members) < 2:
            raise DataError("a calibrated model needs k >= 2 members")

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            return np.empty(0)
        total = np.zeros(X.shape[0])
        for model, calibrator in self.members:
            total += calibrator.apply(model.predict_proba(X))
        return total / len(self.members)


def calibrate_cv(fit: Callable[[np.ndarray, np.ndarray, int], object],
                 X: np.ndarray, y: np.ndarray, k: int = DEFAULT_CAL_FOLDS,
                 seed: int = 0) -> CalibratedModel:
    """Internal stratified k-fold: fit the model on each fold complement,
    fit its sigmoid on the held-out fold, average members at predict time."""
    if k < 2:
        raise DataError(f"calibration needs k >= 2, got {k}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    assignments = stratified_fold_assignments(y.astype(np.int8), k, seed, "calibration")
    seeds = derive_seed_sequence(seed, "calibration-members").generate_state(k)
    members = []
    for fold in range(k):
        held_out = assignments == fold
        model = fit(X[~held_out], y[~held_out], int(seeds[fold]))
        scores = probability_to_score(model.predict_proba(X[held_out]))
        calibrator = fit_platt(scores, y[held_out])
        members.append((model, calibrator))
    return CalibratedModel(members=tuple(members))


def calibrated_to_dict(model: CalibratedModel) -> dict:
    return {
        "format_version": 1,
        "family": "calibrated",
        "members": [
            {"model": model_to_dict(m), "a": c.a, "b": c.b}
            for m, c in model.members
        ],
    }


def calibrated_from_dict(doc: dict) -> CalibratedModel:
    members = tuple(
        (model_from_dict(m["model"]), SigmoidCalibrator(a=float(m["a"]), b=float(m["b"])))
        for m in doc["members"]
    )
    return CalibratedModel(members=members)


def member_models(model: CalibratedModel) -> Sequence[object]:
    return [m for m, _ in model.members]
