"""Experiment configuration document: parsing and upfront validation.

All validation problems are enumerated before any compute and raise
ConfigError with the offending paths.
"""

from __future__ import annotations

import json
import pathlib
from dataclasses import dataclass, field

from tabrisk.errors import ConfigError
from tabrisk.models import FAMILIES, hyper_from_dict
from tabrisk.synthgen import GENERATOR_KINDS

REGIME_KINDS = ("none", "generator", "edge", "generator_plus_edge")


@dataclass(frozen=True)
class RegimeSpec:
    """One training regime: which synthetic rows augment the training side."""

    kind: str
    generator: str | None = None
    n_synth: int = 500
    n_edge: int = 500

    def __post_init__(self):
        if self.kind not in REGIME_KINDS:
            raise ConfigError(f"unknown regime kind {self.kind!r}")
        if self.kind in ("generator", "generator_plus_edge"):
            if self.generator not in GENERATOR_KINDS:
                raise ConfigError(f"regime {self.kind!r} needs a valid generator, "
                                  f"got {self.generator!r}")
        if self.n_synth < 0 or self.n_edge < 0:
            raise ConfigError("synthetic counts must be >= 0")

    @property
    def name(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "generator":
            return self.generator
        if self.kind == "edge":
            return "edge"
        return f"{self.generator}_plus_edge"


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyper: dict = field(default_factory=dict)
    calibrate: bool | None = None  # None = default (tree ensembles only)
    search: dict | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.family!r}")
        hyper_from_dict(self.family, self.hyper)  # validates eagerly

    @property
    def calibrated(self) -> bool:
        if self.calibrate is None:
            return self.family in ("forest", "gbdt")
        return self.calibrate


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: pathlib.Path
    schema: pathlib.Path
    test_frac: float
    k_folds: int
    seed: int
    models: tuple[ModelSpec, ...]
    regimes: tuple[RegimeSpec, ...]
    edge_cohort_n: int = 200
    ece_bins: int = 10
    threshold: float = 0.5
    brier_multiclass: bool = False
    calibration_folds: int = 5
    importance_repeats: int = 10
    search_budget: int = 30
    max_missing_frac: float | None = None
    max_missing: int | None = None
    impute_rounds: int = 10
    impute_tol: float = 1e-3
    select_k: int | None = None
    out_dir: pathlib.Path = pathlib.Path("out")

    def preprocess_options(self) -> dict:
        return {
            "max_missing": self.max_missing,
            "max_missing_frac": self.max_missing_frac,
            "impute_rounds": self.impute_rounds,
            "impute_tol": self.impute_tol,
            "select_k": self.select_k,
        }


def config_from_dict(doc: dict, base_dir: pathlib.Path | None = None) -> ExperimentConfig:
    problems: list[str] = []

    def resolve(key: str) -> pathlib.Path:
        raw = doc.get(key)
        if not raw:
            problems.append(f"$.{key}: required path missing")
            return pathlib.Path(".")
        path = pathlib.Path(raw)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            problems.append(f"$.{key}: file not found: {path}")
        return path

    dataset = resolve("dataset")
    schema = resolve("schema")

    test_frac = float(doc.get("test_frac", 0.2))
    if not 0 < test_frac < 1:
        problems.append(f"$.test_frac: must be in (0,1), got {test_frac}")
    k_folds = int(doc.get("k_folds", 10))
    if k_folds < 2:
        problems.append(f"$.k_folds: must be >= 2, got {k_folds}")
    seed = int(doc.get("seed", 0))

    models: list[ModelSpec] = []
    for i, m in enumerate(doc.get("models", [])):
        try:
            models.append(ModelSpec(
                family=m.get("family", ""),
                hyper=m.get("hyper", {}) or {},
                calibrate=m.get("calibrate"),
                search=m.get("search"),
            ))
        except (ConfigError, TypeError) as exc:
            problems.append(f"$.models[{i}]: {exc}")
    if not models:
        problems.append("$.models: at least one model required")

    regimes: list[RegimeSpec] = []
    for i, r in enumerate(doc.get("regimes", [{"kind": "none"}])):
        try:
            regimes.append(RegimeSpec(
                kind=r.get("kind", ""),
                generator=r.get("generator"),
                n_synth=int(r.get("n_synth", 500)),
                n_edge=int(r.get("n_edge", 500)),
            ))
        except (ConfigError, TypeError, ValueError) as exc:
            problems.append(f"$.regimes[{i}]: {exc}")

    if problems:
        raise ConfigError("invalid experiment config:\n  " + "\n  ".join(problems))

    metrics = doc.get("metrics", {})
    preprocess = doc.get("preprocess", {})
    out_dir = pathlib.Path(doc.get("out", "out"))
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    return ExperimentConfig(
        dataset=dataset,
        schema=schema,
        test_frac=test_frac,
        k_folds=k_folds,
        seed=seed,
        models=tuple(models),
        regimes=tuple(regimes),
        edge_cohort_n=int(doc.get("edge_cohort_n", 200)),
        ece_bins=int(metrics.get("ece_bins", 10)),
        threshold=float(metrics.get("threshold", 0.5)),
        brier_multiclass=bool(metrics.get("brier_multiclass", False)),
        calibration_folds=int(doc.get("calibration_folds", 5)),
        importance_repeats=int(doc.get("importance_repeats", 10)),
        search_budget=int(doc.get("search_budget", 30)),
        max_missing_frac=preprocess.get("max_missing_frac"),
        max_missing=preprocess.get("max_missing"),
        impute_rounds=int(preprocess.get("impute_rounds", 10)),
        impute_tol=float(preprocess.get("impute_tol", 1e-3)),
        select_k=preprocess.get("select_k"),
        out_dir=out_dir,
    )


def load_config(path) -> ExperimentConfig:
    path = pathlib.Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc, base_dir=path.parent)
