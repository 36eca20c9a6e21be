"""Deterministic RNG derivation.

Every random draw in the package traces back to one root seed through
string-tagged derivations, so results never depend on execution order.
"""

import zlib

import numpy as np


def derive_seed_sequence(root_seed: int, *tags) -> np.random.SeedSequence:
    """SeedSequence for (root_seed, tags); tags may be str or int."""
    entropy = [int(root_seed) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, (int, np.integer)):
            entropy.append(int(tag) & 0xFFFFFFFF)
        else:
            entropy.append(zlib.crc32(str(tag).encode("utf-8")))
    return np.random.SeedSequence(entropy)


def derive_rng(root_seed: int, *tags) -> np.random.Generator:
    """Independent generator for the task identified by (root_seed, tags)."""
    return np.random.default_rng(derive_seed_sequence(root_seed, *tags))


def derive_int(root_seed: int, *tags) -> int:
    """Stable integer sub-seed for APIs that take plain seeds."""
    return int(derive_seed_sequence(root_seed, *tags).generate_state(1)[0])
