"""Randomness sources.

Two kinds of randomness are used:

* *Keyed* streams, which map a classical seed to a fixed sequence of 64-bit
  words. These back the seeded state generators and must be bit-stable. The
  construction is Philox4x64-10 (Salmon et al., Random123) keyed with the first
  16 bytes of ``SHA-256(domain || material)`` and started at counter 0.
* *Trial* streams, plain :class:`numpy.random.Generator` objects derived from a
  master seed by :class:`numpy.random.SeedSequence` spawning. Each trial (and
  each branch within a trial) owns its stream, so serial and parallel runs
  produce identical results.
"""

from __future__ import annotations

import hashlib
from typing import Union

import numpy as np

RngLike = Union[None, int, np.random.SeedSequence, np.random.Generator]

DOMAIN = b"pseudodet/v1/"


def keyed_words(material: bytes, n: int) -> np.ndarray:
    """Return ``n`` uint64 words from the keyed counter stream for ``material``."""
    digest = hashlib.sha256(DOMAIN + material).digest()
    key = np.frombuffer(digest[:16], dtype="<u8").astype(np.uint64)
    bitgen = np.random.Philox(key=key, counter=0)
    return bitgen.random_raw(n).astype(np.uint64, copy=False)


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def trial_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the trial addressed by ``path`` under ``master_seed``."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(seq)


def split(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Deterministic child streams; ``split(g, m)[:n] == split(g', n)`` for fresh equal ``g, g'``."""
    return rng.spawn(n)


def random_bits(n: int, rng: RngLike) -> str:
    gen = as_generator(rng)
    return "".join("1" if b else "0" for b in gen.integers(0, 2, size=n))


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return "".join("1" if x != y else "0" for x, y in zip(a, b))


def check_bits(bits: str) -> str:
    if any(ch not in "01" for ch in bits):
        raise ValueError("bitstring must contain only '0' and '1'")
    return bits
