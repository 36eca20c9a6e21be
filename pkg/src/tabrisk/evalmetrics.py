"""Classification, probability-quality, risk-coverage, and cohort metrics.

All operations are pure functions of probability/label arrays. Predicted
probabilities are for the positive class; the implied two-class
distribution is (1-p, p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from tabrisk.errors import DataError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion_at_threshold(p: np.ndarray, y: np.ndarray, threshold: float = 0.5) -> ConfusionCounts:
    """Counts with 'positive' meaning p >= threshold."""
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y)
    if p.shape[0] == 0 or p.shape[0] != y.shape[0]:
        raise DataError("probabilities and labels must be non-empty and aligned")
    pred = p >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int((pred & pos).sum()),
        tn=int((~pred & ~pos).sum()),
        fp=int((pred & ~pos).sum()),
        fn=int((~pred & pos).sum()),
    )


def classification_metrics(c: ConfusionCounts) -> dict[str, float]:
    """Accuracy, precision, recall, F1; 0/0 denominators yield 0."""
    if c.n == 0:
        raise DataError("empty confusion counts")

    def ratio(num: int, den: int) -> float:
        return num / den if den else 0.0

    precision = ratio(c.tp, c.tp + c.fp)
    recall = ratio(c.tp, c.tp + c.fn)
    f1 = ratio(2 * precision * recall, precision + recall) if (precision + recall) else 0.0
    return {
        "accuracy": (c.tp + c.tn) / c.n,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


def auc_roc(p: np.ndarray, y: np.ndarray) -> float:
    """Probability a random positive outranks a random negative, ties 0.5.

    Rank form of the Mann-Whitney statistic; equals the trapezoidal area
    under the ROC curve.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y)
    n1 = int((y == 1).sum())
    n0 = int((y == 0).sum())
    if n1 == 0 or n0 == 0:
        raise DataError("AUC-ROC needs both classes present")
    ranks = rankdata(p)
    return float((ranks[y == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def avg_confidence(p: np.ndarray) -> float:
    """Mean over samples of the larger class probability."""
    p = np.asarray(p, dtype=np.float64)
    return float(np.maximum(p, 1.0 - p).mean())


def avg_entropy(p: np.ndarray) -> float:
    """Mean two-class entropy in nats; 0*ln(0) counts as 0."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    for q in (p, 1.0 - p):
        nz = q > 0.0
        out[nz] -= q[nz] * np.log(q[nz])
    return float(out.mean())


def brier(p: np.ndarray, y: np.ndarray, multiclass: bool = False) -> float:
    """Mean squared error of the predicted probabilities.

    The binary (positive-class) form is the default; multiclass=True sums
    the squared error over both class slots, doubling the value.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    base = float(((p - y) ** 2).mean())
    return 2.0 * base if multiclass else base


def ece(p: np.ndarray, y: np.ndarray, bins: int = 10) -> float:
    """Expected calibration error over equal-width confidence bins on [0,1].

    Per bin: |accuracy - mean confidence| weighted by occupancy; empty bins
    contribute nothing. Predicted label is p >= 0.5.
    """
    if bins < 1:
        raise DataError(f"bins must be >= 1, got {bins}")
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y)
    conf = np.maximum(p, 1.0 - p)
    correct = (p >= 0.5) == (y == 1)
    idx = np.minimum((conf * bins).astype(np.int64), bins - 1)
    total = 0.0
    n = p.shape[0]
    for b in range(bins):
        members = idx == b
        count = int(members.sum())
        if count == 0:
            continue
        gap = abs(correct[members].mean() - conf[members].mean())
        total += count / n * gap
    return float(total)


@dataclass(frozen=True)
class RCCurve:
    """Selective-prediction curve: risk among the most confident prefix."""

    coverage: np.ndarray
    risk: np.ndarray
    auc_rc: float


def risk_coverage(p: np.ndarray, y: np.ndarray) -> RCCurve:
    """Risk-coverage curve by confidence-descending prefix enumeration.

    At coverage k/n the selective risk is the threshold-0.5
    misclassification rate within the k most confident samples (stable
    order for confidence ties). The area is the trapezoid over coverage.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y)
    n = p.shape[0]
    if n == 0:
        raise DataError("risk_coverage needs at least one sample")
    conf = np.maximum(p, 1.0 - p)
    order = np.argsort(-conf, kind="stable")
    err = ((p >= 0.5) != (y == 1))[order]
    k = np.arange(1, n + 1, dtype=np.float64)
    risk = np.cumsum(err) / k
    coverage = k / n
    auc = float(np.trapezoid(risk, coverage)) if n > 1 else float(risk[0])
    return RCCurve(coverage=coverage, risk=risk, auc_rc=auc)


@dataclass(frozen=True)
class CohortSummary:
    q0: float
    q50: float
    q99: float
    mean: float
    std: float


def cohort_summary(p: np.ndarray) -> CohortSummary:
    """Nearest-rank quantiles plus mean and population std of predicted
    positive probabilities for one cohort."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape[0] == 0:
        raise DataError("cohort_summary needs at least one sample")
    s = np.sort(p)
    n = p.shape[0]

    def nearest_rank(q: float) -> float:
        rank = max(1, int(np.ceil(q * n)))
        return float(s[rank - 1])

    return CohortSummary(
        q0=nearest_rank(0.0),
        q50=nearest_rank(0.5),
        q99=nearest_rank(0.99),
        mean=float(p.mean()),
        std=float(p.std()),
    )
