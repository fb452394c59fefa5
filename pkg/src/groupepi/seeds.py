"""Deterministic derivation of per-component random streams.

Every pipeline stage owns a private generator derived from one root seed
and a fixed stream identifier, so adding replicates or reordering stages
never perturbs the draws of an existing stream.
"""

from __future__ import annotations

import numpy as np

# Stream identifiers. These are part of the on-disk reproducibility
# contract: changing them changes every derived stream.
FAMILIES = 1
NETWORK = 2
PARAMS = 3
EPIDEMIC = 4
TESTS = 5
CHAIN = 6
SPLIT = 7
DATASET = 8


def sequence(root_seed: int, *path: int) -> np.random.SeedSequence:
    """Seed sequence for the stream addressed by ``path`` under ``root_seed``."""
    return np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(p) for p in path))


def generator(root_seed: int, *path: int) -> np.random.Generator:
    """Fresh generator for the stream addressed by ``path``."""
    return np.random.default_rng(sequence(root_seed, *path))


def child_seed(root_seed: int, *path: int) -> int:
    """Collapse a derived stream into a single integer seed.

    Used where a config field carries one seed (for example the chain seed
    handed to an inference run) rather than a generator.
    """
    return int(sequence(root_seed, *path).generate_state(1, np.uint64)[0])
