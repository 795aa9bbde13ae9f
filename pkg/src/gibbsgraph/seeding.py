"""Deterministic randomness plumbing.

Every stochastic routine in the package takes a ``numpy.random.Generator``.
Experiments and the CLI start from a single integer master seed and derive
independent substreams per replicate with ``numpy.random.SeedSequence``
spawn keys, so replicate ``i`` sees the same stream no matter how many
replicates run or in what order.

Numba kernels use numpy's legacy ``np.random.seed`` API internally; 32-bit
kernel seeds are derived from the same SeedSequence so they inherit the
master seed's determinism.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["rng_from_seed", "substream", "kernel_seed"]


def rng_from_seed(seed: int | None) -> np.random.Generator:
    """A fresh PCG64 generator. ``None`` seeds from OS entropy."""
    return np.random.default_rng(seed)


def _key_word(part: int | str) -> int:
    """Map one key element to a spawn-key word, stably across processes."""
    if isinstance(part, bool) or not isinstance(part, (int, str)):
        raise TypeError(f"substream keys are ints or strings, got {part!r}")
    if isinstance(part, int):
        if part < 0:
            raise ValueError(f"integer key elements must be >= 0, got {part}")
        return part
    digest = hashlib.sha256(part.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def substream(master_seed: int, *key: int | str) -> np.random.Generator:
    """Generator for the substream identified by ``key`` under ``master_seed``.

    The same (master_seed, key) pair always yields the same stream, and
    distinct keys yield statistically independent streams. String elements
    are hashed (sha256, not Python's salted hash) so labels like "oracle"
    stay stable across interpreter runs.
    """
    words = tuple(_key_word(part) for part in key)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=words))


def kernel_seed(rng: np.random.Generator) -> int:
    """Draw a 32-bit seed for a numba kernel's internal legacy RNG."""
    return int(rng.integers(0, 2**32 - 1))
