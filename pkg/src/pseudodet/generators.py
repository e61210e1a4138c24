"""Seeded generators built on the extractor.

* :func:`wqprg`: seed -> seeded state -> extract.
* :func:`sqprg`: XOR of s independent :func:`wqprg` calls.
* :func:`qprf`: key k_1 || ... || k_lambda and input x; XOR over i of
  extract(seeded_prfs_state(k_i, x)).

Per-branch randomness comes from ``rng.spawn``, so branch i always sees the
same stream for a given trial generator regardless of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable

from .errors import ConfigError
from .extractor import BitString, ExtractorParams, derive_params, extract
from .rng import RngLike, as_generator, check_bits, split
from .states import PureState, SeedKey, SeedRole, seeded_prfs_state, seeded_state
from .tomography import TomographyConfig


@dataclass(frozen=True)
class QprgConfig:
    """Generator configuration.

    ``dim`` overrides d = lam**c; experiments at desk scale fix d directly and
    use ``lam`` only as the seed length. ``faithful=True`` enforces
    d == lam**c and c >= 6.
    """

    lam: int
    c: int = 6
    s: int = 1
    tomo: TomographyConfig = field(default_factory=TomographyConfig.exact)
    dim: int | None = None
    input_len: int | None = None
    faithful: bool = False
    state_source: Callable[[SeedKey, int], PureState] = field(default=seeded_state, compare=False, repr=False)
    prfs_source: Callable[..., PureState] = field(default=seeded_prfs_state, compare=False, repr=False)

    def __post_init__(self):
        if self.lam < 1:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.s < 1:
            raise ConfigError(f"s must be >= 1, got {self.s}")
        if self.faithful:
            if self.c < 6:
                raise ConfigError(f"c must be >= 6 for stretch, got {self.c}")
            if self.dim is not None and self.dim != self.lam**self.c:
                raise ConfigError(f"dim {self.dim} != lambda^c = {self.lam ** self.c}")

    @property
    def d(self) -> int:
        return self.dim if self.dim is not None else self.lam**self.c

    @property
    def m(self) -> int:
        """QPRF input length (default 2 * lambda)."""
        return self.input_len if self.input_len is not None else 2 * self.lam

    @property
    def params(self) -> ExtractorParams:
        return derive_params(self.d)


@dataclass(frozen=True)
class GeneratorOutput:
    bits: BitString
    seed_echo: SeedKey

    @property
    def tie_flags(self) -> tuple[bool, ...]:
        return self.bits.ties

    def __str__(self):
        return self.bits.bits


def _as_seed(seed, role: SeedRole) -> SeedKey:
    if isinstance(seed, SeedKey):
        return seed
    return SeedKey(check_bits(seed), role)


def wqprg(seed, cfg: QprgConfig, rng: RngLike = None) -> GeneratorOutput:
    seed = _as_seed(seed, SeedRole.QPRG)
    if len(seed) != cfg.lam:
        raise ValueError(f"seed must have {cfg.lam} bits, got {len(seed)}")
    state = cfg.state_source(seed.with_role(SeedRole.PRS), cfg.d)
    bits = extract(state, cfg.tomo, cfg.params, rng)
    return GeneratorOutput(bits, seed)


def _fold(outputs: list[BitString]) -> BitString:
    return reduce(lambda a, b: a ^ b, outputs)


def sqprg(seeds, cfg: QprgConfig, rng: RngLike = None) -> GeneratorOutput:
    """XOR-amplified generator over exactly ``cfg.s`` seeds (or a flat s*lambda-bit key)."""
    if isinstance(seeds, (str, SeedKey)):
        seeds = _as_seed(seeds, SeedRole.AMPLIFIED).check(cfg.lam, cfg.s).parse(cfg.lam, SeedRole.QPRG)
    seeds = [_as_seed(k, SeedRole.QPRG) for k in seeds]
    if len(seeds) != cfg.s:
        raise ValueError(f"expected {cfg.s} seeds, got {len(seeds)}")
    branches = split(as_generator(rng), len(seeds))
    outs = [wqprg(k, cfg, g).bits for k, g in zip(seeds, branches)]
    echo = SeedKey("".join(k.bits for k in seeds), SeedRole.AMPLIFIED)
    return GeneratorOutput(_fold(outs), echo)


def qprf_branch(key, x: str, cfg: QprgConfig, rng: RngLike = None) -> BitString:
    """extract(seeded_prfs_state(key, x)) for one lambda-bit key block."""
    key = _as_seed(key, SeedRole.PRS).with_role(SeedRole.PRS)
    if len(key) != cfg.lam:
        raise ValueError(f"key block must have {cfg.lam} bits, got {len(key)}")
    state = cfg.prfs_source(key, x, cfg.d, cfg.m)
    return extract(state, cfg.tomo, cfg.params, rng)


def qprf(key, x: str, cfg: QprgConfig, rng: RngLike = None) -> GeneratorOutput:
    key = _as_seed(key, SeedRole.QPRF)
    if len(key) != cfg.lam * cfg.lam:
        raise ValueError(f"key must have {cfg.lam * cfg.lam} bits, got {len(key)}")
    check_bits(x)
    if len(x) != cfg.m:
        raise ValueError(f"input must have {cfg.m} bits, got {len(x)}")
    blocks = key.parse(cfg.lam, SeedRole.PRS)
    branches = split(as_generator(rng), len(blocks))
    outs = [qprf_branch(k, x, cfg, g) for k, g in zip(blocks, branches)]
    return GeneratorOutput(_fold(outs), key)


def output_length(lam: int, c: int) -> int:
    return derive_params(lam**c).ell
