"""Deterministic random streams keyed by (seed, label).

Every random draw in the package flows through a stream derived from an
explicit 64-bit seed and a short string label. Philox is counter-based, so
distinct (seed, label) pairs give statistically independent streams and the
same pair always reproduces the same draws.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, label: str = "") -> np.random.Generator:
    """Return the generator for the stream identified by (seed, label)."""
    word = int.from_bytes(
        hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little"
    )
    key = (int(seed) & _MASK64) | (word << 64)
    return np.random.Generator(np.random.Philox(key=key))
