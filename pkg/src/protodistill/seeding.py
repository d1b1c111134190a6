"""Deterministic RNG streams derived from a root seed plus string tags.

Every stochastic choice in the pipeline draws from a stream keyed by
(seed, purpose, ...), so reruns with the same config are bit-identical
and unrelated components never share a stream.
"""

import hashlib

import numpy as np


def _material(key) -> int:
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    return int(key) & 0xFFFFFFFFFFFFFFFF


def rng_for(*keys) -> np.random.Generator:
    """A fresh Generator for the given key tuple."""
    if not keys:
        raise ValueError("rng_for: at least one key required")
    return np.random.default_rng(np.random.SeedSequence([_material(k) for k in keys]))
