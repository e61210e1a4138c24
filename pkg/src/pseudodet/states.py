"""Pure states, density matrices, Haar sampling and seeded state generators.

Haar sampling and the seeded generators share :func:`_gaussian_amplitudes`:
a block of uint64 words is turned into complex Gaussians with an explicit
Box-Muller transform and normalised. Only the source of the words differs.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, InvalidDimensionError, RoleMismatchError
from .rng import RngLike, as_generator, check_bits, keyed_words

NORM_TOL = 1e-12

_TWO_POW_M53 = 2.0**-53


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector in C^d.

    Construct through :meth:`from_amplitudes` unless the amplitudes are already
    normalised; the constructor only checks.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2:
            raise InvalidDimensionError(f"need a 1-d amplitude vector of length >= 2, got shape {amps.shape}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (|psi|^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", _frozen(amps.copy()))

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = True) -> "PureState":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalise the zero vector")
            amps = amps / norm
        return cls(amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def probabilities(self) -> np.ndarray:
        """Computational-basis probabilities |alpha_i|^2 (the diagonal of |psi><psi|)."""
        return np.abs(self.amplitudes) ** 2

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return np.array_equal(self.amplitudes, other.amplitudes)

    def __hash__(self):
        return hash(self.amplitudes.tobytes())

    # serialisation: little-endian float64, interleaved (re, im)

    def to_bytes(self) -> bytes:
        return self.amplitudes.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PureState":
        if len(data) % 16:
            raise ValueError("byte length must be a multiple of 16")
        return cls(np.frombuffer(data, dtype="<c16").astype(np.complex128))

    def to_json(self) -> str:
        return json.dumps([[float(a.real), float(a.imag)] for a in self.amplitudes])

    @classmethod
    def from_json(cls, text: str) -> "PureState":
        pairs = json.loads(text)
        return cls(np.array([complex(re, im) for re, im in pairs]))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    atol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise InvalidDimensionError(f"need a square matrix with d >= 2, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=self.atol, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > self.atol:
            raise ValueError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", _frozen(m.copy()))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()


class SeedRole(str, enum.Enum):
    PRS = "prs-seed"
    QPRG = "qprg-seed"
    AMPLIFIED = "amplified-seed"
    QPRF = "qprf-key"


@dataclass(frozen=True)
class SeedKey:
    """Classical seed; ``bits`` is a string over {'0', '1'}."""

    bits: str
    role: SeedRole = SeedRole.PRS

    def __post_init__(self):
        check_bits(self.bits)
        object.__setattr__(self, "role", SeedRole(self.role))

    def __len__(self):
        return len(self.bits)

    def expected_length(self, lam: int, s: int = 1) -> int:
        return {
            SeedRole.PRS: lam,
            SeedRole.QPRG: lam,
            SeedRole.AMPLIFIED: s * lam,
            SeedRole.QPRF: lam * lam,
        }[self.role]

    def check(self, lam: int, s: int = 1) -> "SeedKey":
        want = self.expected_length(lam, s)
        if len(self.bits) != want:
            raise ValueError(f"{self.role.value} must have {want} bits for lambda={lam}, got {len(self.bits)}")
        return self

    def with_role(self, role: SeedRole) -> "SeedKey":
        return SeedKey(self.bits, role)

    def parse(self, width: int, role: SeedRole = SeedRole.PRS) -> list["SeedKey"]:
        """Split a flat key left to right into blocks of ``width`` bits."""
        if width <= 0 or len(self.bits) % width:
            raise ValueError(f"cannot split {len(self.bits)} bits into blocks of {width}")
        return [SeedKey(self.bits[i:i + width], role) for i in range(0, len(self.bits), width)]


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def _gaussian_amplitudes(words: np.ndarray) -> np.ndarray:
    """Normalised complex Gaussian vectors from uint64 words of shape (..., 2*dim).

    Word pair (w0, w1) gives u1 = ((w0 >> 11) + 1) * 2^-53 in (0, 1] and
    u2 = (w1 >> 11) * 2^-53 in [0, 1); the amplitude is
    sqrt(-2 ln u1) * (cos 2 pi u2 + i sin 2 pi u2). Each coordinate's real and
    imaginary parts are therefore independent N(0, 1) before normalisation.
    """
    words = np.asarray(words, dtype=np.uint64)
    u1 = ((words[..., 0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_POW_M53
    u2 = (words[..., 1::2] >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    amps = radius * np.cos(theta) + 1j * (radius * np.sin(theta))
    norms = np.sqrt(np.sum(amps.real**2 + amps.imag**2, axis=-1, keepdims=True))
    return amps / norms


def _stream_words(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, np.iinfo(np.uint64).max, size=shape, dtype=np.uint64, endpoint=True)


def sample_haar(dim: int, rng: RngLike = None) -> PureState:
    """Draw a Haar-random pure state in C^dim."""
    dim = _check_dim(dim)
    words = _stream_words(as_generator(rng), 2 * dim)
    return PureState(_gaussian_amplitudes(words))


def haar_amplitudes(dim: int, n: int, rng: RngLike = None) -> np.ndarray:
    """``n`` Haar-random amplitude vectors as an (n, dim) array. Same procedure as :func:`sample_haar`."""
    dim = _check_dim(dim)
    words = _stream_words(as_generator(rng), (n, 2 * dim))
    return _gaussian_amplitudes(words)


def haar_amplitude_chunks(dim: int, n: int, rng: RngLike = None, chunk: int | None = None):
    """Yield Haar amplitude batches totalling ``n`` rows, bounded in memory."""
    gen = as_generator(rng)
    if chunk is None:
        chunk = max(1, 2**22 // dim)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        yield haar_amplitudes(dim, m, gen)
        done += m


def _prs_material(seed: SeedKey) -> bytes:
    return b"prs\x00" + seed.bits.encode("ascii")


def _prfs_material(key: SeedKey, x: str) -> bytes:
    return b"prfs\x00" + key.bits.encode("ascii") + b"\x00" + x.encode("ascii")


def seeded_state(seed: SeedKey, dim: int) -> PureState:
    """Deterministic Haar-like state for ``seed`` (a stand-in for a log-qubit PRS)."""
    if seed.role is not SeedRole.PRS:
        raise RoleMismatchError(f"seeded_state needs a prs-seed, got {seed.role.value}")
    dim = _check_dim(dim)
    return PureState(_gaussian_amplitudes(keyed_words(_prs_material(seed), 2 * dim)))


def seeded_prfs_state(key: SeedKey, x: str, dim: int, input_len: int | None = None) -> PureState:
    """Deterministic state for (key, x): the keyed stream is derived from key || x."""
    if key.role is not SeedRole.PRS:
        raise RoleMismatchError(f"seeded_prfs_state needs a prs-seed, got {key.role.value}")
    check_bits(x)
    if input_len is not None and len(x) != input_len:
        raise ValueError(f"input must have {input_len} bits, got {len(x)}")
    dim = _check_dim(dim)
    return PureState(_gaussian_amplitudes(keyed_words(_prfs_material(key, x), 2 * dim)))


StateSource = Callable[[SeedKey, int], PureState]


def basis_state(dim: int, index: int = 0) -> PureState:
    dim = _check_dim(dim)
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return PureState(amps)


def uniform_superposition(dim: int, support=None) -> PureState:
    """Equal-weight superposition over ``support`` (0-based indices; default all)."""
    dim = _check_dim(dim)
    amps = np.zeros(dim, dtype=np.complex128)
    idx = np.arange(dim) if support is None else np.asarray(list(support))
    amps[idx] = 1.0
    return PureState.from_amplitudes(amps)


def random_density_matrix(dim: int, rng: RngLike = None, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from a Ginibre matrix G: rho = G G^dag / tr(G G^dag)."""
    gen = as_generator(rng)
    dim = _check_dim(dim)
    rank = dim if rank is None else rank
    g = gen.standard_normal((dim, rank)) + 1j * gen.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.entries
    if isinstance(x, PureState):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    return np.asarray(x, dtype=np.complex128)


def trace_distance(a, b) -> float:
    """Half the sum of singular values of ``a - b``."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    return float(0.5 * np.linalg.svd(ma - mb, compute_uv=False).sum())


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2 for pure states."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def pack_states(states) -> bytes:
    """Concatenate states as: uint32 count, uint32 dim, then each state's bytes."""
    states = list(states)
    dim = states[0].dim if states else 0
    if any(s.dim != dim for s in states):
        raise DimensionMismatchError("all states must share a dimension")
    return struct.pack("<II", len(states), dim) + b"".join(s.to_bytes() for s in states)


def unpack_states(data: bytes) -> list[PureState]:
    count, dim = struct.unpack_from("<II", data, 0)
    size = 16 * dim
    return [PureState.from_bytes(data[8 + i * size: 8 + (i + 1) * size]) for i in range(count)]
