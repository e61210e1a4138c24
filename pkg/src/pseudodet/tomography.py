"""Classical snapshots of a state's computational-basis diagonal.

The rounding step downstream reads only diagonal entries, so the surrogate
tomography estimates the diagonal directly. Three backends:

``exact``
    p_i = |alpha_i|^2.
``bounded-noise``
    uniform noise in [-delta, delta] per entry, then the Euclidean projection
    onto {x in simplex : |x_i - p_i| <= delta}. The projection keeps the
    per-entry error bound intact.
``multinomial-shots``
    counts / shots from one multinomial draw of ``shots`` basis measurements.
    By Hoeffding and a union bound, ``shots >= ln(2d / fail_prob) / (2 delta^2)``
    gives Pr[max_i |p_hat_i - p_i| > delta] <= fail_prob.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ToleranceWarning
from .rng import RngLike, as_generator
from .states import PureState, _as_matrix


class Backend(str, enum.Enum):
    EXACT = "exact"
    BOUNDED_NOISE = "bounded-noise"
    MULTINOMIAL = "multinomial-shots"


def required_shots(dim: int, delta: float, fail_prob: float) -> int:
    """Smallest shot count with Pr[max_i |p_hat_i - p_i| > delta] <= fail_prob."""
    if dim < 1:
        raise ConfigError(f"dim must be positive, got {dim}")
    if not 0 < delta <= 1:
        raise ConfigError(f"delta must lie in (0, 1], got {delta}")
    if not 0 < fail_prob < 1:
        raise ConfigError(f"fail_prob must lie in (0, 1), got {fail_prob}")
    return math.ceil(math.log(2 * dim / fail_prob) / (2 * delta * delta))


@dataclass(frozen=True)
class TomographyConfig:
    backend: Backend = Backend.EXACT
    delta: float = 1.0
    shots: int = 0
    fail_prob: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "backend", Backend(self.backend))
        if not 0 < self.delta <= 1:
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta}")
        if not 0 < self.fail_prob < 1:
            raise ConfigError(f"fail_prob must lie in (0, 1), got {self.fail_prob}")
        if self.backend is Backend.MULTINOMIAL and self.shots <= 0:
            raise ConfigError("multinomial-shots backend needs shots > 0")

    @classmethod
    def exact(cls) -> "TomographyConfig":
        return cls(Backend.EXACT)

    @classmethod
    def auto(cls, dim: int, delta: float, fail_prob: float = 0.01) -> "TomographyConfig":
        """Multinomial backend with the Hoeffding shot count for (dim, delta, fail_prob)."""
        return cls(Backend.MULTINOMIAL, delta, required_shots(dim, delta, fail_prob), fail_prob)

    def compliant(self, dim: int) -> bool:
        if self.backend is Backend.MULTINOMIAL:
            return self.shots >= required_shots(dim, self.delta, self.fail_prob)
        return True

    def to_dict(self) -> dict:
        return {"backend": self.backend.value, "delta": self.delta, "shots": self.shots, "fail_prob": self.fail_prob}

    @classmethod
    def from_dict(cls, d: dict) -> "TomographyConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class DiagonalSnapshot:
    p: np.ndarray
    delta: float
    backend: Backend = Backend.EXACT
    shots: int = 0
    undersampled: bool = False

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).copy()
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.p.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(self.p):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "p": [float(v) for v in self.p],
            "delta": self.delta,
            "backend": self.backend.value,
            "shots": self.shots,
            "undersampled": self.undersampled,
        })

    @classmethod
    def from_json(cls, text: str) -> "DiagonalSnapshot":
        d = json.loads(text)
        return cls(np.array(d["p"]), d["delta"], Backend(d["backend"]), d["shots"], d["undersampled"])


def project_to_box_simplex(y: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``y`` onto {x : sum(x) = 1, lo <= x <= hi}.

    The minimiser is clip(y - tau, lo, hi) for the tau making the sum one;
    tau is found by bisection. The set must be nonempty (sum(lo) <= 1 <= sum(hi)).
    """
    lo_t, hi_t = float(np.min(y - hi)), float(np.max(y - lo))
    for _ in range(200):
        mid = 0.5 * (lo_t + hi_t)
        if mid in (lo_t, hi_t):
            break
        if np.clip(y - mid, lo, hi).sum() > 1.0:
            lo_t = mid
        else:
            hi_t = mid
    return np.clip(y - 0.5 * (lo_t + hi_t), lo, hi)


def _probabilities(state) -> np.ndarray:
    if isinstance(state, PureState):
        return state.probabilities
    return np.clip(_as_matrix(state).diagonal().real, 0.0, None)


def snapshot(state, cfg: TomographyConfig, rng: RngLike = None) -> DiagonalSnapshot:
    """Estimate the diagonal of ``state`` (a PureState or density matrix)."""
    p = _probabilities(state)
    dim = p.size
    if cfg.backend is Backend.EXACT:
        return DiagonalSnapshot(p, cfg.delta, cfg.backend)
    gen = as_generator(rng)
    if cfg.backend is Backend.BOUNDED_NOISE:
        return DiagonalSnapshot(_bounded_noise(p, cfg.delta, gen), cfg.delta, cfg.backend)
    undersampled = not cfg.compliant(dim)
    if undersampled:
        warnings.warn(
            f"{cfg.shots} shots is below the Hoeffding count for d={dim}, delta={cfg.delta}",
            ToleranceWarning,
            stacklevel=2,
        )
    counts = gen.multinomial(cfg.shots, p / p.sum())
    return DiagonalSnapshot(counts / cfg.shots, cfg.delta, cfg.backend, cfg.shots, undersampled)


def snapshot_batch(probs: np.ndarray, cfg: TomographyConfig, rng: RngLike = None) -> np.ndarray:
    """Vectorised :func:`snapshot` over rows of an (n, d) probability array; returns p_hat rows."""
    probs = np.asarray(probs, dtype=np.float64)
    if cfg.backend is Backend.EXACT:
        return probs.copy()
    gen = as_generator(rng)
    if cfg.backend is Backend.MULTINOMIAL:
        probs = probs / probs.sum(axis=-1, keepdims=True)
        return gen.multinomial(cfg.shots, probs) / cfg.shots
    return np.stack([_bounded_noise(row, cfg.delta, gen) for row in probs])


def _delta_box(p: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    # nudge inward so that |bound - p| <= delta holds in floating point, not just in exact arithmetic
    lo, hi = p - delta, p + delta
    for _ in range(4):
        lo = np.where(p - lo > delta, np.nextafter(lo, np.inf), lo)
        hi = np.where(hi - p > delta, np.nextafter(hi, -np.inf), hi)
    return np.maximum(lo, 0.0), np.minimum(hi, 1.0)


def _bounded_noise(p: np.ndarray, delta: float, gen: np.random.Generator) -> np.ndarray:
    noisy = p + gen.uniform(-delta, delta, size=p.size)
    return project_to_box_simplex(noisy, *_delta_box(p, delta))


def matrix_snapshot(state, cfg: TomographyConfig, rng: RngLike = None) -> np.ndarray:
    """Full-matrix estimate M with TD(rho, M) <= delta (exact and bounded-noise backends only).

    The bounded-noise estimate adds a traceless Hermitian perturbation whose
    trace norm is scaled to a uniform draw in [0, 2 delta]. M need not be PSD.
    """
    rho = _as_matrix(state)
    if cfg.backend is Backend.EXACT:
        return rho.copy()
    if cfg.backend is not Backend.BOUNDED_NOISE:
        raise ConfigError("full-matrix snapshots are available for exact and bounded-noise backends only")
    gen = as_generator(rng)
    d = rho.shape[0]
    g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    h = 0.5 * (g + g.conj().T)
    h -= np.trace(h).real / d * np.eye(d)
    h *= 2.0 * cfg.delta * gen.uniform() / np.abs(np.linalg.eigvalsh(h)).sum()
    return rho + h
