"""Estimators and test statistics used by the checks and experiments."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .rng import RngLike, as_generator, split


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Counts over a fixed finite alphabet (alphabet order is preserved)."""

    alphabet: tuple
    counts: tuple[int, ...]

    def __post_init__(self):
        if not self.alphabet:
            raise ValueError("alphabet must be nonempty")
        if len(self.alphabet) != len(self.counts):
            raise ValueError("alphabet and counts differ in length")

    @classmethod
    def from_samples(cls, samples: Iterable[Hashable], alphabet: Sequence | None = None) -> "EmpiricalDistribution":
        c = Counter(samples)
        if alphabet is None:
            alphabet = sorted(c)
        extra = set(c) - set(alphabet)
        if extra:
            raise ValueError(f"samples outside the alphabet: {sorted(extra)[:5]}")
        return cls(tuple(alphabet), tuple(c.get(a, 0) for a in alphabet))

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def probabilities(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.total

    def mode(self):
        i = int(np.argmax(self.counts))
        return self.alphabet[i], self.counts[i] / self.total


def bit_alphabet(ell: int) -> tuple[str, ...]:
    return tuple("".join(b) for b in itertools.product("01", repeat=ell))


@dataclass(frozen=True)
class TVEstimate:
    value: float
    samples: int
    alphabet_size: int
    bias_note: str | None = None

    def __float__(self):
        return self.value


def tv_empirical(a: EmpiricalDistribution, b) -> TVEstimate:
    """Plug-in total variation distance.

    ``b`` is another :class:`EmpiricalDistribution` or a mapping/array of exact
    probabilities over ``a.alphabet``.
    """
    if isinstance(b, EmpiricalDistribution):
        if tuple(b.alphabet) != tuple(a.alphabet):
            raise ValueError("alphabets differ")
        q = b.probabilities
        n = min(a.total, b.total)
    elif isinstance(b, Mapping):
        if set(b) - set(a.alphabet):
            raise ValueError("reference has outcomes outside the alphabet")
        q = np.array([b.get(x, 0.0) for x in a.alphabet], dtype=np.float64)
        n = a.total
    else:
        q = np.asarray(b, dtype=np.float64)
        if q.shape != (len(a.alphabet),):
            raise ValueError("reference length does not match the alphabet")
        n = a.total
    value = 0.5 * float(np.abs(a.probabilities - q).sum())
    ratio = len(a.alphabet) / n
    note = None
    if ratio > 0.01:
        note = f"plug-in estimate biased upward: alphabet/samples = {ratio:.3g}"
    return TVEstimate(value, n, len(a.alphabet), note)


def uniform_reference(alphabet: Sequence) -> np.ndarray:
    return np.full(len(alphabet), 1.0 / len(alphabet))


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    p_value: float
    samples: int
    alpha: float

    __test__ = False  # keep pytest from collecting this class

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha

    def to_dict(self) -> dict:
        return {"name": self.name, "statistic": self.statistic, "p_value": self.p_value,
                "samples": self.samples, "alpha": self.alpha, "passed": self.passed}


def ks_test(samples, cdf: Callable | str, alpha: float = 0.001, args: tuple = ()) -> TestReport:
    """One-sample Kolmogorov-Smirnov with the asymptotic p-value."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 100:
        raise ValueError(f"KS test needs at least 100 samples, got {x.size}")
    res = sps.kstest(x, cdf, args=args, method="asymp")
    return TestReport("ks", float(res.statistic), float(res.pvalue), x.size, alpha)


def ks_two_sample(a, b, alpha: float = 0.001) -> TestReport:
    res = sps.ks_2samp(np.asarray(a), np.asarray(b), method="asymp")
    return TestReport("ks-2samp", float(res.statistic), float(res.pvalue), min(len(a), len(b)), alpha)


def ks_distance(samples, cdf: Callable) -> float:
    """sup_x |F_n(x) - F(x)| without a test decision."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    f = cdf(x)
    return float(max(np.max(np.arange(1, n + 1) / n - f), np.max(f - np.arange(n) / n)))


def chi2_uniformity(counts, alpha: float = 0.001) -> TestReport:
    """Pearson chi-squared against the uniform distribution on len(counts) cells."""
    counts = np.asarray(counts, dtype=np.float64)
    expected = counts.sum() / counts.size
    if expected < 5:
        raise ValueError(f"expected count per cell is {expected:.3g} < 5")
    res = sps.chisquare(counts)
    return TestReport("chi2-uniform", float(res.statistic), float(res.pvalue), int(counts.sum()), alpha)


def bit_counts(bits: np.ndarray) -> np.ndarray:
    """Histogram of rows of an (n, ell) 0/1 array over {0,1}^ell (MSB = first bit)."""
    bits = np.asarray(bits, dtype=np.int64)
    ell = bits.shape[1]
    idx = bits @ (1 << np.arange(ell - 1, -1, -1))
    return np.bincount(idx, minlength=2**ell)


@dataclass(frozen=True)
class AgreementReport:
    rate: float
    low: float
    high: float
    trials: int


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = sps.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def agreement_rate(produce: Callable[[np.random.Generator], Hashable], trials: int, rng: RngLike = None) -> AgreementReport:
    """Run ``produce`` twice per trial with independent streams; report the fraction of equal pairs."""
    if trials < 30:
        raise ValueError("agreement_rate needs at least 30 trials")
    gen = as_generator(rng)
    agree = 0
    for _ in range(trials):
        g1, g2 = split(gen, 2)
        agree += produce(g1) == produce(g2)
    lo, hi = wilson_interval(agree, trials)
    return AgreementReport(agree / trials, lo, hi, trials)


@dataclass(frozen=True)
class AdvantageReport:
    advantage: float
    stderr: float
    trials: int


def next_bit_advantage(generator: Callable[[np.random.Generator], str], predictor: Callable[[str], str | int],
                       position: int, trials: int, rng: RngLike = None) -> AdvantageReport:
    """Pr[predictor(y[:position]) == y[position]] - 1/2 over fresh generator runs (0-based position)."""
    gen = as_generator(rng)
    hits = 0
    for _ in range(trials):
        y = str(generator(gen))
        if position >= len(y):
            raise ValueError(f"position {position} is beyond output length {len(y)}")
        hits += str(predictor(y[:position])) == y[position]
    rate = hits / trials
    return AdvantageReport(rate - 0.5, math.sqrt(0.25 / trials), trials)


def binomial_normal_tv(r: int) -> float:
    """TV between Binomial(2r, 1/2) and N(r, r/2) discretised onto the integers."""
    k = np.arange(2 * r + 1)
    pmf = sps.binom.pmf(k, 2 * r, 0.5)
    norm = sps.norm(r, math.sqrt(r / 2))
    mass = norm.cdf(k + 0.5) - norm.cdf(k - 0.5)
    mass[0] = norm.cdf(0.5)
    mass[-1] = norm.sf(2 * r - 0.5)
    return 0.5 * float(np.abs(pmf - mass).sum())


def normal_band_bound(delta: float, sigma: float) -> float:
    """sqrt(2/pi) * delta / sigma, the density bound on Pr[|Z - mu| <= delta]."""
    return math.sqrt(2 / math.pi) * delta / sigma
