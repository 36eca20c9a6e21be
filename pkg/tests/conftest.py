import pathlib

import pytest

ASSETS = pathlib.Path(__file__).resolve().parents[1] / "src" / "tabrisk" / "assets"


@pytest.fixture(scope="session")
def benchmark_paths():
    paths = {
        "data": ASSETS / "benchmark.csv",
        "schema": ASSETS / "benchmark_schema.json",
        "config": ASSETS / "benchmark_config.json",
    }
    for p in paths.values():
        if not p.exists():
            pytest.fail(f"bundled benchmark asset missing: {p}")
    return paths
