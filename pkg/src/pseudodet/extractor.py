"""Pseudodeterministic extraction of bits from a d-dimensional pure state.

Parameters (floor semantics, integer arithmetic):

* ell = floor(d^(1/6)) output bits,
* r = floor(d^(2/3)) coordinates per block, ell * r coordinates consumed,
* gap = 1/d, tolerance delta = gap / r, threshold = r / d.

Round sums the first ell blocks of r diagonal estimates into q_1..q_ell and
emits 1 where q_i > r/d, else 0. An exact tie q_i = r/d yields 0 and sets the
block's tie flag.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvalidDimensionError, ToleranceWarning
from .rng import RngLike
from .states import PureState
from .tomography import Backend, DiagonalSnapshot, TomographyConfig, snapshot


def iroot(n: int, k: int) -> int:
    """Largest integer x with x**k <= n."""
    x = int(round(n ** (1.0 / k)))
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


@dataclass(frozen=True)
class ExtractorParams:
    d: int
    ell: int
    r: int
    k_coords: int
    gap: float
    delta: float
    threshold: float


def derive_params(d: int) -> ExtractorParams:
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"d must be an integer >= 2, got {d!r}")
    d = int(d)
    ell = iroot(d, 6)
    r = iroot(d * d, 3)
    if ell < 2:
        warnings.warn(f"d={d} < 64 gives a single output bit", ToleranceWarning, stacklevel=2)
    gap = 1.0 / d
    return ExtractorParams(d=d, ell=ell, r=r, k_coords=ell * r, gap=gap, delta=gap / r, threshold=r / d)


@dataclass(frozen=True)
class BitString:
    """Extractor output. Equality and hashing look at ``bits`` only."""

    bits: str
    ties: tuple[bool, ...] = field(default=(), compare=False)

    def __str__(self):
        return self.bits

    def __len__(self):
        return len(self.bits)

    def __xor__(self, other: "BitString") -> "BitString":
        if len(self.bits) != len(other.bits):
            raise ValueError("length mismatch")
        bits = "".join("1" if a != b else "0" for a, b in zip(self.bits, other.bits))
        ties = tuple(a or b for a, b in zip(self._ties(), other._ties()))
        return BitString(bits, ties)

    def _ties(self) -> tuple[bool, ...]:
        return self.ties or (False,) * len(self.bits)

    @property
    def tied(self) -> bool:
        return any(self.ties)

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls("0" * n, (False,) * n)


def block_sums(p: np.ndarray, params: ExtractorParams) -> np.ndarray:
    """q_1..q_ell for a diagonal vector, or row-wise for an (n, d) array."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] < params.k_coords:
        raise DimensionMismatchError(f"need at least {params.k_coords} diagonal entries, got {p.shape[-1]}")
    head = p[..., : params.k_coords]
    return head.reshape(*p.shape[:-1], params.ell, params.r).sum(axis=-1)


def _bits_from_q(q: np.ndarray, params: ExtractorParams) -> BitString:
    bits = "".join("1" if qi > params.threshold else "0" for qi in q)
    return BitString(bits, tuple(bool(qi == params.threshold) for qi in q))


def round_bits(snap, params: ExtractorParams) -> BitString:
    """Round a diagonal snapshot (or raw diagonal vector) to ell bits."""
    p = snap.p if isinstance(snap, DiagonalSnapshot) else snap
    return _bits_from_q(block_sums(p, params), params)


def round_bits_batch(p: np.ndarray, params: ExtractorParams) -> np.ndarray:
    """Row-wise rounding; returns an (n, ell) uint8 array."""
    return (block_sums(p, params) > params.threshold).astype(np.uint8)


def _check_dim(state: PureState, params: ExtractorParams):
    if state.dim != params.d:
        raise DimensionMismatchError(f"state has d={state.dim}, params expect d={params.d}")


def canonical_f(state: PureState, params: ExtractorParams) -> BitString:
    """Round applied to the exact diagonal; the reference value extraction aims for."""
    _check_dim(state, params)
    return round_bits(state.probabilities, params)


@dataclass(frozen=True, eq=False)
class GoodSetReport:
    member: bool
    min_gap: float
    q: np.ndarray


def good_set_check(state: PureState, params: ExtractorParams) -> GoodSetReport:
    """Is every block sum strictly more than ``gap`` away from the threshold?"""
    _check_dim(state, params)
    q = block_sums(state.probabilities, params)
    min_gap = float(np.min(np.abs(q - params.threshold)))
    return GoodSetReport(member=min_gap > params.gap, min_gap=min_gap, q=q)


def good_set_batch(p: np.ndarray, params: ExtractorParams) -> np.ndarray:
    """Boolean membership per row of an (n, d) diagonal array."""
    q = block_sums(p, params)
    return np.all(np.abs(q - params.threshold) > params.gap, axis=-1)


def extract(state: PureState, cfg: TomographyConfig, params: ExtractorParams, rng: RngLike = None) -> BitString:
    """Snapshot then round.

    For states in the good set, a multinomial backend with ``cfg.delta <=
    params.delta`` and the Hoeffding shot count reproduces :func:`canonical_f`
    with probability at least ``1 - cfg.fail_prob``.
    """
    _check_dim(state, params)
    if cfg.backend is not Backend.EXACT and cfg.delta > params.delta:
        warnings.warn(
            f"tomography delta {cfg.delta} exceeds the extractor tolerance {params.delta}",
            ToleranceWarning,
            stacklevel=2,
        )
    return round_bits(snapshot(state, cfg, rng), params)


def side_preserved(q: np.ndarray, q_hat: np.ndarray, params: ExtractorParams) -> np.ndarray:
    """Per block: does q_hat fall on the same side as q, for blocks with |q - r/d| > gap?

    Blocks inside the gap band are reported as True (nothing is asserted there).
    """
    q, q_hat = np.asarray(q), np.asarray(q_hat)
    outside = np.abs(q - params.threshold) > params.gap
    same = (q > params.threshold) == (q_hat > params.threshold)
    return ~outside | same
