"""Minority-class synthetic-data generators and the edge-case sampler.

All generators share the FittedGenerator shape: a `kind` tag, the source
schema, `sample(n, seed)` emitting schema-conformant positive-label rows,
and a fingerprint of the rows they were fitted on (leakage guard).
"""

from tabrisk.synthgen.arf import ArfGenerator, fit_arf
from tabrisk.synthgen.base import fingerprint_set, sample, validate_sample
from tabrisk.synthgen.copula import CopulaGenerator, fit_gaussian_copula
from tabrisk.synthgen.edge import EdgeCaseSpec, EdgeGenerator, sample_edge_cases
from tabrisk.synthgen.tvae import TvaeGenerator, fit_tvae

GENERATOR_KINDS = ("copula", "arf", "tvae")


def fit_generator(kind: str, rows, seed: int = 0, **kwargs):
    """Fit one of the named minority-row generators."""
    if kind == "copula":
        return fit_gaussian_copula(rows)
    if kind == "arf":
        return fit_arf(rows, seed=seed)
    if kind == "tvae":
        return fit_tvae(rows, seed=seed, **kwargs)
    from tabrisk.errors import ConfigError

    raise ConfigError(f"unknown generator kind {kind!r}")


__all__ = [
    "ArfGenerator", "CopulaGenerator", "TvaeGenerator",
    "EdgeCaseSpec", "EdgeGenerator",
    "fit_arf", "fit_gaussian_copula", "fit_tvae", "fit_generator",
    "sample", "sample_edge_cases", "validate_sample", "fingerprint_set",
    "GENERATOR_KINDS",
]
