"""Seed management and typical-word sampling.

All randomness flows from a single run seed through named streams, one per
sampler role, so concurrent or reordered sub-runs cannot perturb each
other.  Seeds may be given as integers or as arbitrary string tokens;
tokens are hashed to 64 bits.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .core import Alphabet, Word
from .measures import TargetMeasure


def seed_int(token: int | str) -> int:
    """Normalize a seed token to a 64-bit integer."""
    if isinstance(token, int):
        return token & (2 ** 64 - 1)
    digest = hashlib.sha256(str(token).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def stream(seed: int | str, name: str) -> np.random.Generator:
    """Independent generator for one named sampler role under a run seed."""
    digest = hashlib.sha256(f"{seed_int(seed)}/{name}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "big")))


def sample_word(target: TargetMeasure, length: int, rng: np.random.Generator) -> Word:
    """Word of the given length sampled from the target's cylinder process."""
    return Word(Alphabet(target.alphabet_size), target.sample(length, rng))
