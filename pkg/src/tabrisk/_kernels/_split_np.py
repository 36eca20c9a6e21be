"""Numpy fallback for the split-scan kernels.

Both backends must agree bit-for-bit: scores are built from exact integer
counts (gini) or sequential prefix sums (newton), evaluated with the same
arithmetic expression as the compiled scan.
"""

import numpy as np

_NO_SPLIT = -1


def gini_scan(values, labels, min_leaf):
    """Best binary split of a presorted node by weighted Gini impurity.

    values: float64, ascending; labels: float64 in {0,1}, aligned.
    A boundary after position i is valid when values[i] < values[i+1] and
    both children hold at least min_leaf rows.

    Returns (score, index): score = n1L*n0L/nL + n1R*n0R/nR (lower is purer),
    index = last row of the left child, or (inf, -1) when no split is valid.
    """
    n = values.shape[0]
    if n < 2 * min_leaf:
        return np.inf, _NO_SPLIT
    c1 = np.cumsum(labels)
    total1 = c1[-1]
    nl = np.arange(1, n, dtype=np.float64)
    n1l = c1[:-1]
    nr = n - nl
    n1r = total1 - n1l
    score = n1l * (nl - n1l) / nl + n1r * (nr - n1r) / nr
    valid = (values[1:] > values[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return np.inf, _NO_SPLIT
    score = np.where(valid, score, np.inf)
    idx = int(np.argmin(score))
    return float(score[idx]), idx


def newton_scan(values, grad, hess, lam, min_leaf, min_child_weight):
    """Best binary split of a presorted node by second-order gain.

    Maximizes GL^2/(HL+lam) + GR^2/(HR+lam) over valid boundaries; children
    must hold >= min_leaf rows and >= min_child_weight hessian mass.

    Returns (gain, index) or (-inf, -1) when no split is valid.
    """
    n = values.shape[0]
    if n < 2 * min_leaf:
        return -np.inf, _NO_SPLIT
    gl = np.cumsum(grad)
    hl = np.cumsum(hess)
    gtot = gl[-1]
    htot = hl[-1]
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    glv = gl[:-1]
    hlv = hl[:-1]
    grv = gtot - glv
    hrv = htot - hlv
    gain = glv * glv / (hlv + lam) + grv * grv / (hrv + lam)
    valid = (
        (values[1:] > values[:-1])
        & (nl >= min_leaf)
        & (nr >= min_leaf)
        & (hlv >= min_child_weight)
        & (hrv >= min_child_weight)
    )
    if not valid.any():
        return -np.inf, _NO_SPLIT
    gain = np.where(valid, gain, -np.inf)
    idx = int(np.argmax(gain))
    return float(gain[idx]), idx
