"""Vectorised Monte Carlo over Haar and seeded states.

Everything here works on batches of diagonals and streams the Haar draws in
chunks, so d = 4096 runs with 10^4..10^5 samples stay within memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extractor import ExtractorParams, block_sums, derive_params
from .rng import RngLike, as_generator, random_bits
from .states import SeedKey, SeedRole, haar_amplitude_chunks, seeded_state
from .stats import bit_counts
from .tomography import TomographyConfig, snapshot_batch


@dataclass(frozen=True, eq=False)
class HaarBatch:
    params: ExtractorParams
    q: np.ndarray          # (n, ell) exact block sums
    first_amp: np.ndarray  # (n,) alpha_1

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def member(self) -> np.ndarray:
        return np.all(np.abs(self.q - self.params.threshold) > self.params.gap, axis=1)

    @property
    def bits(self) -> np.ndarray:
        return (self.q > self.params.threshold).astype(np.uint8)


def haar_batch(d: int, n: int, rng: RngLike = None) -> HaarBatch:
    params = derive_params(d)
    qs, firsts = [], []
    for amps in haar_amplitude_chunks(d, n, as_generator(rng)):
        p = amps.real**2 + amps.imag**2
        qs.append(block_sums(p, params))
        firsts.append(amps[:, 0])
    return HaarBatch(params, np.concatenate(qs), np.concatenate(firsts))


def haar_extractions(d: int, n: int, cfg: TomographyConfig, rng: RngLike = None) -> tuple[np.ndarray, np.ndarray]:
    """Extractor outputs on n Haar states: (noisy bits, exact bits), both (n, ell) uint8."""
    params = derive_params(d)
    gen = as_generator(rng)
    noisy, exact = [], []
    for amps in haar_amplitude_chunks(d, n, gen):
        p = amps.real**2 + amps.imag**2
        exact.append(block_sums(p, params) > params.threshold)
        noisy.append(block_sums(snapshot_batch(p, cfg, gen), params) > params.threshold)
    return np.concatenate(noisy).astype(np.uint8), np.concatenate(exact).astype(np.uint8)


def random_seeds(lam: int, n: int, rng: RngLike = None) -> list[SeedKey]:
    gen = as_generator(rng)
    return [SeedKey(random_bits(lam, gen), SeedRole.PRS) for _ in range(n)]


def seeded_block_sums(d: int, seeds) -> np.ndarray:
    params = derive_params(d)
    return np.stack([block_sums(seeded_state(k, d).probabilities, params) for k in seeds])


def uniformity_counts(bits: np.ndarray) -> np.ndarray:
    return bit_counts(bits)
