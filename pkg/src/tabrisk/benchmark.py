"""Seeded synthesis of the bundled benchmark dataset.

A clinical-style imbalanced table: 2,044 rows, exactly 158 positives
(prevalence ~7.7%), 21 features of which 4 carry the outcome signal (Age,
Ejection Fraction, Peripheral Artery Disease, Cerebrovascular Disease).
Labels come from thresholding a noisy latent score, so the positive count
is exact while the signal stays logistic-like. Edge-case distributions
describe a critical cohort: very old, low ejection fraction, high
comorbidity rates.

Regenerate the committed assets with `python -m tabrisk.benchmark`.
"""

from __future__ import annotations

import json
import pathlib

import numpy as np

from tabrisk.data import ColumnSchema, Table, build_table, schema_to_json, write_csv
from tabrisk.rng import derive_rng

BENCHMARK_SEED = 20260810
N_ROWS = 2044
N_POSITIVES = 158
TARGET_NAME = "Cardiac Death"

# name, (mu, sigma), (edge_mu, edge_sigma), missing_frac
NUMERIC_FEATURES = [
    ("Age", (63.9, 9.85), (92.5, 4.33), 0.0),
    ("Ejection Fraction", (56.2, 10.6), (22.5, 4.33), 0.0),
    ("eGFR", (75.3, 16.8), (30.0, 8.66), 0.04),
    ("Stent Diameter", (3.25, 0.513), (2.375, 0.22), 0.0),
    ("Stent Length", (24.5, 8.34), (33.0, 2.89), 0.03),
]

# name, base rate, edge rate, missing_frac
CATEGORICAL_FEATURES = [
    ("Anemia", 0.05, 0.90, 0.02),
    ("Cerebrovascular Disease", 0.123, 0.90, 0.0),
    ("Peripheral Artery Disease", 0.078, 0.85, 0.0),
    ("Aortic Stenosis", 0.024, 0.80, 0.0),
    ("Single Vessel Disease", 0.465, 0.90, 0.0),
    ("Coronary Calcium", 0.209, 0.90, 0.0),
    ("Stent Type - Calypso", 0.362, 0.70, 0.0),
    ("Medina Side", 0.336, 0.80, 0.0),
    ("Atrial Fibrillation", 0.143, 0.80, 0.0),
    ("DEFINITION Score", 0.006, 0.90, 0.0),
    ("History of Cancer", 0.051, 0.60, 0.0),
    ("Stent Type - Synergy", 0.01, 0.70, 0.0),
    ("Stent Type - Xience", 0.12, 0.70, 0.0),
    ("Ad-hoc PCI", 0.407, 0.80, 0.0),
    ("Previous PCI", 0.413, 0.80, 0.0),
    ("CTO Bifurcation", 0.081, 0.80, 0.0),
]

# the planted outcome model: clipped z-scored numerics / raw indicators
SIGNAL_WEIGHTS = {
    "Age": 1.0,
    "Ejection Fraction": -1.0,
    "Peripheral Artery Disease": 1.5,
    "Cerebrovascular Disease": 1.5,
}
SIGNAL_CLIP = 1.6  # saturate numeric tails so risk stays sub-threshold
NOISE_SCALE = 1.1  # logistic noise on the latent score

PLANTED_FEATURES = ("Age", "Ejection Fraction", "Peripheral Artery Disease",
                    "Cerebrovascular Disease")


def generate_benchmark(seed: int = BENCHMARK_SEED) -> Table:
    rng = derive_rng(seed, "benchmark")
    columns: dict[str, np.ndarray] = {}
    schemas: list[ColumnSchema] = []
    for name, (mu, sd), edge, miss in NUMERIC_FEATURES:
        columns[name] = rng.normal(mu, sd, size=N_ROWS)
        schemas.append(ColumnSchema(name, "numeric", edge=edge))
    for name, rate, edge_rate, miss in CATEGORICAL_FEATURES:
        columns[name] = (rng.uniform(size=N_ROWS) < rate).astype(np.int64)
        schemas.append(ColumnSchema(name, "categorical", ("no", "yes"),
                                    edge={"no": round(1.0 - edge_rate, 6),
                                          "yes": edge_rate}))

    score = np.zeros(N_ROWS)
    for name, weight in SIGNAL_WEIGHTS.items():
        col = columns[name]
        spec = next((s for s in NUMERIC_FEATURES if s[0] == name), None)
        if spec is not None:
            mu, sd = spec[1]
            score += weight * np.clip((col - mu) / sd, -SIGNAL_CLIP, SIGNAL_CLIP)
        else:
            score += weight * col
    latent = score + NOISE_SCALE * rng.logistic(size=N_ROWS)
    cutoff = np.sort(latent)[::-1][N_POSITIVES - 1]
    target = (latent >= cutoff).astype(np.int8)
    assert int(target.sum()) == N_POSITIVES

    # MCAR gaps, independent of the outcome
    missing_frac = {name: m for name, _, _, m in NUMERIC_FEATURES}
    missing_frac.update({name: m for name, _, _, m in CATEGORICAL_FEATURES})
    arrays = []
    for s in schemas:
        col = columns[s.name].astype(np.float64 if s.kind == "numeric" else np.int64)
        if missing_frac[s.name] > 0:
            gaps = rng.uniform(size=N_ROWS) < missing_frac[s.name]
            col[gaps] = np.nan if s.kind == "numeric" else -1
        arrays.append(col)
    return build_table(schemas, arrays, target)


def benchmark_config_doc() -> dict:
    """Experiment configuration shipped alongside the benchmark."""
    return {
        "dataset": "benchmark.csv",
        "schema": "benchmark_schema.json",
        "test_frac": 0.2,
        "k_folds": 10,
        "seed": BENCHMARK_SEED,
        "models": [
            {"family": "logistic", "hyper": {"l2_strength": 1e-3, "max_iters": 400}},
            {"family": "forest",
             "hyper": {"n_trees": 300, "max_depth": 7, "min_leaf": 2, "min_split": 4},
             "calibrate": True},
            {"family": "gbdt",
             "hyper": {"n_rounds": 150, "max_depth": 3, "learning_rate": 0.1},
             "calibrate": True},
            {"family": "kan",
             "hyper": {"grid_size": 5, "spline_order": 3, "learning_rate": 0.05,
                       "positive_class_weight": 2.0, "epochs": 40,
                       "hidden_width": 8}},
        ],
        "regimes": [
            {"kind": "none"},
            {"kind": "generator", "generator": "arf", "n_synth": 500},
            {"kind": "edge", "n_edge": 500},
            {"kind": "generator_plus_edge", "generator": "arf",
             "n_synth": 500, "n_edge": 500},
        ],
        "edge_cohort_n": 200,
        "calibration_folds": 3,
        "importance_repeats": 10,
        "metrics": {"ece_bins": 10, "threshold": 0.5},
        "preprocess": {"max_missing_frac": 0.25, "impute_rounds": 10,
                       "impute_tol": 1e-3},
        "out": "out",
    }


def write_assets(directory) -> dict[str, pathlib.Path]:
    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    table = generate_benchmark()
    paths = {
        "data": directory / "benchmark.csv",
        "schema": directory / "benchmark_schema.json",
        "config": directory / "benchmark_config.json",
    }
    write_csv(table, paths["data"], target_name=TARGET_NAME)
    doc = schema_to_json(table.schemas, TARGET_NAME, {"0": 0, "1": 1})
    paths["schema"].write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    paths["config"].write_text(
        json.dumps(benchmark_config_doc(), indent=2, sort_keys=True) + "\n")
    return paths


if __name__ == "__main__":
    out = write_assets(pathlib.Path(__file__).parent / "assets")
    for key, path in out.items():
        print(f"{key}: {path}")
