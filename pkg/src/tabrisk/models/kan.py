"""Kolmogorov-Arnold network with one hidden layer.

Every edge carries a learnable univariate function: a weighted SiLU base
activation plus a B-spline whose uniform grid spans the per-input training
range with a 10% margin. Training is mini-batch gradient descent on
class-weighted binary cross-entropy; gradients are exact backprop and are
checked against finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabrisk.errors import ConfigError, DataError, FitError
from tabrisk.models.logistic import _sigmoid
from tabrisk.rng import derive_rng


@dataclass(frozen=True)
class KanHyper:
    grid_size: int = 5
    spline_order: int = 3
    learning_rate: float = 0.05
    positive_class_weight: float = 1.0
    epochs: int = 100
    hidden_width: int = 8
    batch_size: int = 128

    def __post_init__(self):
        if min(self.grid_size, self.spline_order, self.epochs,
               self.hidden_width, self.batch_size) < 1:
            raise ConfigError("KAN counts must be >= 1")
        if self.learning_rate <= 0 or self.positive_class_weight <= 0:
            raise ConfigError("KAN rates and class weight must be > 0")


def _make_grid(lo: np.ndarray, hi: np.ndarray, grid_size: int, order: int) -> np.ndarray:
    """Uniform knots covering [lo, hi] per input, extended by `order`
    intervals on each side so every in-range point has full basis support."""
    span = hi - lo
    degenerate = span <= 0
    lo = np.where(degenerate, lo - 1.0, lo - 0.1 * span)
    hi = np.where(degenerate, hi + 1.0, hi + 0.1 * span)
    interval = (hi - lo) / grid_size
    steps = np.arange(-order, grid_size + order + 1)
    return lo[:, None] + interval[:, None] * steps[None, :]


def _basis_and_deriv(x: np.ndarray, grid: np.ndarray, order: int):
    """Cox-de Boor bases of the given order and their derivatives.

    x: (B, n_in); grid: (n_in, n_knots). Returns two (B, n_in, n_basis)
    arrays with n_basis = n_knots - order - 1.
    """
    xe = x[:, :, None]
    bases = ((xe >= grid[None, :, :-1]) & (xe < grid[None, :, 1:])).astype(np.float64)
    prev = bases
    for k in range(1, order + 1):
        prev = bases
        left = (xe - grid[None, :, : -(k + 1)]) / (grid[:, k:-1] - grid[:, : -(k + 1)])[None]
        right = (grid[None, :, k + 1:] - xe) / (grid[:, k + 1:] - grid[:, 1:-k])[None]
        bases = left * bases[:, :, :-1] + right * bases[:, :, 1:]
    denom_l = (grid[:, order:-1] - grid[:, : -(order + 1)])[None]
    denom_r = (grid[:, order + 1:] - grid[:, 1:-order])[None]
    deriv = order * (prev[:, :, :-1] / denom_l - prev[:, :, 1:] / denom_r)
    return bases, deriv


def _silu(x: np.ndarray):
    s = _sigmoid(x)
    return x * s, s * (1.0 + x * (1.0 - s))


class _KanLayer:
    def __init__(self, n_in: int, n_out: int, grid: np.ndarray, order: int,
                 rng: np.random.Generator):
        self.order = order
        self.grid = grid
        self.base_w = rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_out, n_in))
        n_basis = grid.shape[1] - order - 1
        self.spline_w = rng.normal(0.0, 0.1 / np.sqrt(n_in), size=(n_out, n_in, n_basis))

    def forward(self, x: np.ndarray):
        act, dact = _silu(x)
        basis, dbasis = _basis_and_deriv(x, self.grid, self.order)
        out = act @ self.base_w.T + np.einsum("bim,oim->bo", basis, self.spline_w)
        return out, (act, dact, basis, dbasis)

    def backward(self, dout: np.ndarray, cache):
        act, dact, basis, dbasis = cache
        grads = {
            "base": dout.T @ act,
            "spline": np.einsum("bo,bim->oim", dout, basis),
        }
        dx = (dout @ self.base_w) * dact
        dx += np.einsum("bo,oim,bim->bi", dout, self.spline_w, dbasis)
        return dx, grads


class KanModel:
    """Fitted network; treat as immutable once fit_kan returns it."""

    def __init__(self, layers: list[_KanLayer], bias: float, hyper: KanHyper,
                 n_features: int):
        self.layers = layers
        self.bias = np.array([bias])
        self.hyper = hyper
        self.n_features = n_features

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        h = X
        for layer in self.layers:
            h, _ = layer.forward(h)
        return h[:, 0] + self.bias[0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            return np.empty(0)
        return _sigmoid(self.decision(X))

    # -- training internals (also exercised by the gradient-check tests) --

    def parameters(self) -> dict[str, np.ndarray]:
        out = {"bias": self.bias}
        for i, layer in enumerate(self.layers):
            out[f"l{i}_base"] = layer.base_w
            out[f"l{i}_spline"] = layer.spline_w
        return out

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        """Weighted-BCE loss and exact gradients for every parameter."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        caches = []
        h = X
        for layer in self.layers:
            h, cache = layer.forward(h)
            caches.append(cache)
        z = h[:, 0] + self.bias[0]
        w = np.where(y == 1.0, self.hyper.positive_class_weight, 1.0)
        wsum = w.sum()
        loss = float((w * (np.logaddexp(0.0, z) - y * z)).sum() / wsum)
        dz = w * (_sigmoid(z) - y) / wsum
        grads: dict[str, np.ndarray] = {"bias": np.array([dz.sum()])}
        dh = dz[:, None]
        for i in reversed(range(len(self.layers))):
            dh, layer_grads = self.layers[i].backward(dh, caches[i])
            grads[f"l{i}_base"] = layer_grads["base"]
            grads[f"l{i}_spline"] = layer_grads["spline"]
        return loss, grads


def fit_kan(X: np.ndarray, y: np.ndarray, hyper: KanHyper, seed: int = 0) -> KanModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.isfinite(X).all():
        raise DataError("KAN requires finite (standardized) inputs")
    n, d = X.shape
    rng = derive_rng(seed, "kan")
    grid1 = _make_grid(X.min(axis=0), X.max(axis=0), hyper.grid_size, hyper.spline_order)
    layer1 = _KanLayer(d, hyper.hidden_width, grid1, hyper.spline_order, rng)
    hidden, _ = layer1.forward(X)
    grid2 = _make_grid(hidden.min(axis=0), hidden.max(axis=0),
                       hyper.grid_size, hyper.spline_order)
    layer2 = _KanLayer(hyper.hidden_width, 1, grid2, hyper.spline_order, rng)
    prevalence = float(np.clip(y.mean(), 1e-7, 1 - 1e-7))
    model = KanModel([layer1, layer2], float(np.log(prevalence / (1 - prevalence))),
                     hyper, d)
    params = model.parameters()
    lr = hyper.learning_rate
    for epoch in range(hyper.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            batch = perm[start:start + hyper.batch_size]
            loss, grads = model.loss_and_grads(X[batch], y[batch])
            if not np.isfinite(loss):
                raise FitError(
                    f"non-finite KAN loss at epoch {epoch}, batch offset {start} "
                    f"(lr={lr}, grid={hyper.grid_size}, order={hyper.spline_order})"
                )
            for name, g in grads.items():
                params[name] -= lr * g
    return model
