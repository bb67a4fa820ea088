"""Seedable generators and deterministic child-seed derivation."""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective avalanche mixer on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(base_seed: int, index: int) -> int:
    """Seed of ensemble member ``index``: ``mix64(base ^ golden * (index + 1))``."""
    return mix64((base_seed & MASK64) ^ ((GOLDEN64 * (index + 1)) & MASK64))


def make_rng(seed: int) -> np.random.Generator:
    """Philox (counter-based) generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(seed & MASK64))
