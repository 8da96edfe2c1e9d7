"""Deterministic derivation of RNG sub-streams.

Every stochastic choice in the package (synthetic event placement, epoch
shuffles, client/task sampling, weight initialization) draws from a generator
built here, so a single integer seed pins down an entire run.  Streams are
keyed by ``(seed, *tags)`` where tags are small ints or short strings; string
tags are hashed with BLAKE2 so the derivation is stable across processes and
platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MOD = 2**63


def _as_entropy(key: int | str) -> int:
    if isinstance(key, str):
        digest = hashlib.blake2s(key.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % _MOD
    return int(key) % _MOD


def derive_rng(*keys: int | str) -> np.random.Generator:
    """Return a PCG64 generator keyed by the given seed components."""
    if not keys:
        raise ValueError("derive_rng requires at least one key")
    entropy = [_as_entropy(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def subseed(*keys: int | str) -> int:
    """Collapse seed components into a single non-negative 63-bit integer.

    Used where a config field stores a plain int seed that is later fed back
    into :func:`derive_rng`.
    """
    entropy = [_as_entropy(k) for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0]) % _MOD
