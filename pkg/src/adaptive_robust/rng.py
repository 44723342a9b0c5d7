"""Seeded counter-based random streams.

Every random object in the package draws from a Philox generator whose
seed sequence carries a spawn key, so that replica ``j`` of a structure
built with seed ``s`` always sees the same stream regardless of how many
other replicas exist or in what order they were built.
"""

import numpy as np

DEFAULT_SEED = 20230917


def substream(seed, *keys):
    """Return a Philox generator for ``seed`` and an integer key path."""
    if isinstance(seed, np.random.Generator):
        raise TypeError("substream expects an integer seed, not a Generator")
    if seed is None:
        seed = DEFAULT_SEED
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng_or_seed, *keys):
    """Accept a Generator or an integer seed; seeds go through :func:`substream`."""
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    if rng_or_seed is None:
        rng_or_seed = DEFAULT_SEED
    return substream(rng_or_seed, *keys)


def child_seed(seed, *keys):
    """Derive a 63-bit integer seed from ``seed`` and a key path."""
    return int(substream(seed, *keys).integers(0, 2**63 - 1))
