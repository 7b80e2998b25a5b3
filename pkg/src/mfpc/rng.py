"""Seeded random streams.

Every random draw in the package comes from a generator derived from one
master seed plus a purpose tag (and optional integer indices such as a
trial number), so independent consumers never share a stream and results
do not depend on execution order.
"""

import hashlib

import numpy as np

BIT_GENERATOR = "PCG64"


def rng_descriptor() -> str:
    """Algorithm name and pinned library version, embedded in outputs."""
    return f"numpy.random.{BIT_GENERATOR} (SeedSequence spawn-key derivation), numpy {np.__version__}"


def _tag_key(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:4], "little")


def stream(seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Return the generator for ``(seed, tag, *indices)``.

    The same arguments always yield the same sequence; different tags or
    indices yield statistically independent sequences.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_tag_key(tag), *map(int, indices)))
    return np.random.Generator(np.random.PCG64(ss))
