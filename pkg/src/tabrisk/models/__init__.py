"""Four probabilistic classifiers behind one contract.

Every family exposes fit(X, y, hyper, seed) -> fitted model and
fitted.predict_proba(X) -> positive-class probabilities in [0, 1];
identical (data, hyper, seed) reproduce identical predictions. Fitted
models serialize to a versioned JSON document that round-trips
prediction-identically.
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from tabrisk.errors import ConfigError, DataError
from tabrisk.models.boosting import GbdtHyper, GbdtModel, fit_gbdt
from tabrisk.models.forest import ForestHyper, ForestModel, fit_random_forest
from tabrisk.models.kan import KanHyper, KanModel, _KanLayer, fit_kan
from tabrisk.models.logistic import LogisticHyper, LogisticModel, fit_logistic
from tabrisk.models.tree import tree_from_dict, tree_to_dict

MODEL_FORMAT_VERSION = 1

FAMILIES = {
    "logistic": (LogisticHyper, fit_logistic),
    "forest": (ForestHyper, fit_random_forest),
    "gbdt": (GbdtHyper, fit_gbdt),
    "kan": (KanHyper, fit_kan),
}


def hyper_from_dict(family: str, doc: dict | None):
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}")
    hyper_cls, _ = FAMILIES[family]
    return hyper_cls(**(doc or {}))


def fit_model(family: str, X: np.ndarray, y: np.ndarray, hyper=None, seed: int = 0):
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}")
    hyper_cls, fit = FAMILIES[family]
    if hyper is None:
        hyper = hyper_cls()
    return fit(X, y, hyper, seed)


def predict_proba(fitted, X: np.ndarray) -> np.ndarray:
    """Positive-class probability per row of X."""
    p = fitted.predict_proba(np.asarray(X, dtype=np.float64))
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise DataError("model produced probabilities outside [0, 1]")
    return p


def model_to_dict(model) -> dict:
    doc: dict = {"format_version": MODEL_FORMAT_VERSION}
    if isinstance(model, LogisticModel):
        doc.update(family="logistic", hyper=asdict(model.hyper), params={
            "coef": model.coef.tolist(),
            "intercept": model.intercept,
            "n_features": model.n_features,
            "converged": model.converged,
        })
    elif isinstance(model, ForestModel):
        doc.update(family="forest", hyper=asdict(model.hyper), params={
            "trees": [tree_to_dict(t) for t in model.trees],
            "n_features": model.n_features,
        })
    elif isinstance(model, GbdtModel):
        doc.update(family="gbdt", hyper=asdict(model.hyper), params={
            "base_score": model.base_score,
            "trees": [tree_to_dict(t) for t in model.trees],
            "n_features": model.n_features,
        })
    elif isinstance(model, KanModel):
        doc.update(family="kan", hyper=asdict(model.hyper), params={
            "bias": float(model.bias[0]),
            "n_features": model.n_features,
            "layers": [
                {
                    "grid": layer.grid.tolist(),
                    "base_w": layer.base_w.tolist(),
                    "spline_w": layer.spline_w.tolist(),
                }
                for layer in model.layers
            ],
        })
    else:
        raise ConfigError(f"cannot serialize model of type {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ConfigError(f"unsupported model format {doc.get('format_version')!r}")
    family = doc["family"]
    hyper = hyper_from_dict(family, doc.get("hyper"))
    params = doc["params"]
    if family == "logistic":
        return LogisticModel(
            coef=np.asarray(params["coef"], dtype=np.float64),
            intercept=float(params["intercept"]),
            hyper=hyper,
            n_features=int(params["n_features"]),
            converged=bool(params["converged"]),
        )
    if family == "forest":
        return ForestModel(
            trees=tuple(tree_from_dict(t) for t in params["trees"]),
            hyper=hyper,
            n_features=int(params["n_features"]),
            inbag=None,
        )
    if family == "gbdt":
        return GbdtModel(
            base_score=float(params["base_score"]),
            trees=tuple(tree_from_dict(t) for t in params["trees"]),
            hyper=hyper,
            n_features=int(params["n_features"]),
        )
    if family == "kan":
        layers = []
        for spec in params["layers"]:
            layer = _KanLayer.__new__(_KanLayer)
            layer.order = hyper.spline_order
            layer.grid = np.asarray(spec["grid"], dtype=np.float64)
            layer.base_w = np.asarray(spec["base_w"], dtype=np.float64)
            layer.spline_w = np.asarray(spec["spline_w"], dtype=np.float64)
            layers.append(layer)
        return KanModel(layers, float(params["bias"]), hyper, int(params["n_features"]))
    raise ConfigError(f"unknown model family {family!r}")


__all__ = [
    "FAMILIES",
    "LogisticHyper", "ForestHyper", "GbdtHyper", "KanHyper",
    "LogisticModel", "ForestModel", "GbdtModel", "KanModel",
    "fit_logistic", "fit_random_forest", "fit_gbdt", "fit_kan",
    "fit_model", "predict_proba", "hyper_from_dict",
    "model_to_dict", "model_from_dict",
]
