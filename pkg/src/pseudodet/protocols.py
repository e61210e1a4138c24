"""One-time pad, bit commitment and non-adaptive CPA encryption over pseudodeterministic generators.

A *pad generator* here is any object with an ``ell`` attribute and
``__call__(seed_bits, rng) -> str``; a *PRF* additionally takes the input,
``prf(key_bits, x, rng) -> str``. :class:`QprgPad` wraps the quantum
generators, :class:`SyntheticGenerator` is a classical stand-in with a tunable
error rate, and :class:`ToyGenerator` exposes exact per-key output
distributions for the binding analysis.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import ConfigError
from .generators import QprgConfig, qprf_branch, wqprg
from .rng import RngLike, as_generator, check_bits, random_bits, split, xor_bits


class Vote(NamedTuple):
    winner: str
    count: int
    low_confidence: bool


def majority_string(strings: Sequence[str]) -> Vote:
    """Plurality vote over whole strings; ties go to the lexicographically smallest."""
    strings = list(strings)
    if not strings:
        raise ValueError("majority of an empty list")
    if len({len(s) for s in strings}) != 1:
        raise ValueError("strings have different lengths")
    counts = Counter(strings)
    best = max(counts.values())
    winner = min(s for s, c in counts.items() if c == best)
    return Vote(winner, best, best <= len(strings) / 2)


def _hash_bits(n: int, *parts: bytes) -> str:
    out, counter = [], 0
    while len(out) * 256 < n:
        h = hashlib.sha256(b"\x00".join(parts) + counter.to_bytes(4, "little")).digest()
        out.append("".join(f"{byte:08b}" for byte in h))
        counter += 1
    return "".join(out)[:n]


# -- pad generators -----------------------------------------------------------


class QprgPad:
    """The seeded quantum generator as a pad source."""

    def __init__(self, cfg: QprgConfig):
        self.cfg = cfg
        self.ell = cfg.params.ell

    def __call__(self, seed: str, rng: RngLike = None) -> str:
        return wqprg(seed, self.cfg, rng).bits.bits

    def prf(self, key: str, x: str, rng: RngLike = None) -> str:
        return qprf_branch(key, x, self.cfg, rng).bits


@dataclass
class SyntheticGenerator:
    """Classical pseudodeterministic generator with a known error rate.

    Each call returns the canonical string for the seed (a SHA-256 expansion)
    with probability ``fidelity``, otherwise a uniformly random different
    string. Two independent calls therefore agree with probability at least
    ``fidelity**2``; :meth:`for_agreement` picks the fidelity for a target
    pairwise agreement.
    """

    ell: int
    fidelity: float = 1.0
    salt: bytes = b"synthetic"

    @classmethod
    def for_agreement(cls, ell: int, agreement: float, salt: bytes = b"synthetic") -> "SyntheticGenerator":
        return cls(ell, math.sqrt(agreement), salt)

    def canonical(self, seed: str, x: str = "") -> str:
        return _hash_bits(self.ell, self.salt, seed.encode(), x.encode())

    def _emit(self, canon: str, rng) -> str:
        gen = as_generator(rng)
        if gen.random() < self.fidelity:
            return canon
        while True:
            other = random_bits(self.ell, gen)
            if other != canon:
                return other

    def __call__(self, seed: str, rng: RngLike = None) -> str:
        return self._emit(self.canonical(seed), rng)

    def prf(self, key: str, x: str, rng: RngLike = None) -> str:
        return self._emit(self.canonical(key, x), rng)


class ToyGenerator:
    """Generator on lam-bit keys with an explicit finite output distribution per key.

    ``dists[k]`` maps output ints (out_bits wide, MSB first) to probabilities.
    """

    def __init__(self, lam: int, out_bits: int, dists: Sequence[dict[int, float]]):
        if len(dists) != 2**lam:
            raise ValueError(f"need {2 ** lam} key distributions, got {len(dists)}")
        if 2**lam > 2**12:
            raise ConfigError("toy key space is limited to 2^12 keys")
        self.lam, self.out_bits, self.ell = lam, out_bits, out_bits
        self.dists = [dict(d) for d in dists]
        for d in self.dists:
            if abs(sum(d.values()) - 1.0) > 1e-12 or min(d.values()) < 0:
                raise ValueError("each key needs a probability distribution")
        self._supports = [(np.fromiter(d.keys(), np.int64), np.fromiter(d.values(), np.float64)) for d in self.dists]

    @classmethod
    def random(cls, lam: int, rng: RngLike = None, out_bits: int | None = None, max_alts: int = 3,
               min_modal: float = 0.3, deterministic: bool = False) -> "ToyGenerator":
        gen = as_generator(rng)
        out_bits = 3 * lam if out_bits is None else out_bits
        dists = []
        for _ in range(2**lam):
            outs = gen.choice(2**out_bits, size=1 + max_alts, replace=False)
            if deterministic:
                dists.append({int(outs[0]): 1.0})
                continue
            modal = gen.uniform(min_modal, 1.0)
            w = gen.dirichlet(np.ones(max_alts)) * (1.0 - modal)
            d = {int(outs[0]): modal}
            d.update({int(o): float(x) for o, x in zip(outs[1:], w)})
            total = sum(d.values())
            dists.append({o: p / total for o, p in d.items()})
        return cls(lam, out_bits, dists)

    def key_index(self, seed: str) -> int:
        return int(seed, 2)

    def distribution(self, seed: str) -> dict[int, float]:
        return self.dists[self.key_index(seed)]

    def modal(self, k: int) -> int:
        """Most likely output of key index k, lexicographically first on ties."""
        d = self.dists[k]
        best = max(d.values())
        return min(o for o, p in d.items() if p == best)

    def to_bits(self, y: int) -> str:
        return format(y, f"0{self.out_bits}b")

    def __call__(self, seed: str, rng: RngLike = None) -> str:
        outs, probs = self._supports[self.key_index(seed)]
        return self.to_bits(int(as_generator(rng).choice(outs, p=probs)))


# -- one-time pad ---------------------------------------------------------------


@dataclass(frozen=True)
class PotpCiphertext:
    blocks: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps({"blocks": list(self.blocks)})


def _parse_key(key: str, lam: int) -> list[str]:
    check_bits(key)
    if len(key) != lam * lam:
        raise ValueError(f"key must have {lam * lam} bits, got {len(key)}")
    return [key[i:i + lam] for i in range(0, lam * lam, lam)]


class PseudorandomOTP:
    """c_i = m XOR G(k_i) for the lam blocks of a lam^2-bit key; decrypt by plurality."""

    def __init__(self, lam: int, generator, faithful: bool = False):
        if faithful and generator.ell <= lam * lam:
            raise ConfigError(f"stretch requires ell > lambda^2 = {lam * lam}, got {generator.ell}")
        self.lam, self.G = lam, generator

    def gen(self, rng: RngLike = None) -> str:
        return random_bits(self.lam * self.lam, rng)

    def enc(self, key: str, m: str, rng: RngLike = None) -> PotpCiphertext:
        check_bits(m)
        if len(m) != self.G.ell:
            raise ValueError(f"message must have {self.G.ell} bits, got {len(m)}")
        seeds = _parse_key(key, self.lam)
        streams = split(as_generator(rng), self.lam)
        return PotpCiphertext(tuple(xor_bits(m, self.G(k, g)) for k, g in zip(seeds, streams)))

    def dec(self, key: str, ct: PotpCiphertext, rng: RngLike = None) -> Vote:
        seeds = _parse_key(key, self.lam)
        if len(ct.blocks) != self.lam or any(len(c) != self.G.ell for c in ct.blocks):
            raise ValueError("ciphertext shape does not match lambda and ell")
        streams = split(as_generator(rng), self.lam)
        return majority_string([xor_bits(c, self.G(k, g)) for c, k, g in zip(ct.blocks, seeds, streams)])


# -- commitment -----------------------------------------------------------------


class Verdict(str, enum.Enum):
    ZERO = "0"
    ONE = "1"
    REJECT = "reject"


@dataclass
class CommitTranscript:
    r: str
    com: tuple[str, ...]
    b: int | None = None
    seeds: tuple[str, ...] = ()
    verdict: Verdict | None = None
    matches: int | None = None

    def to_json(self) -> str:
        d = asdict(self)
        d["verdict"] = None if self.verdict is None else self.verdict.value
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "CommitTranscript":
        d = json.loads(text)
        d["com"], d["seeds"] = tuple(d["com"]), tuple(d["seeds"])
        d["verdict"] = None if d["verdict"] is None else Verdict(d["verdict"])
        return cls(**d)


def acceptance_threshold(lam: int) -> int:
    return math.ceil(2 * lam / 3)


def commit(b: int, r: str, seeds: Sequence[str], generator, rng: RngLike = None) -> tuple[str, ...]:
    """Block i is G(k_i) for b = 0 and G(k_i) XOR r for b = 1."""
    lam = len(seeds)
    if b not in (0, 1):
        raise ValueError("b must be 0 or 1")
    if generator.ell != 3 * lam or len(r) != 3 * lam:
        raise ConfigError(f"commitment needs 3*lambda = {3 * lam}-bit outputs and r; got ell={generator.ell}, |r|={len(r)}")
    streams = split(as_generator(rng), lam)
    blocks = [generator(k, g) for k, g in zip(seeds, streams)]
    return tuple(xor_bits(y, r) if b else y for y in blocks)


def reveal_verify(transcript: CommitTranscript, generator, rng: RngLike = None) -> Verdict:
    """Receiver side: recompute G(k_i) with fresh randomness and count matches."""
    t = transcript
    lam = len(t.com)
    try:
        if t.b not in (0, 1) or len(t.seeds) != lam or lam == 0:
            raise ValueError("malformed decommitment")
        for k in t.seeds:
            check_bits(k)
            if len(k) != len(t.seeds[0]):
                raise ValueError("seed length mismatch")
    except (ValueError, TypeError):
        t.verdict, t.matches = Verdict.REJECT, 0
        return t.verdict
    streams = split(as_generator(rng), lam)
    n = 0
    for y, k, g in zip(t.com, t.seeds, streams):
        out = generator(k, g)
        n += (xor_bits(out, t.r) if t.b else out) == y
    t.matches = n
    t.verdict = (Verdict.ONE if t.b else Verdict.ZERO) if n >= acceptance_threshold(lam) else Verdict.REJECT
    return t.verdict


class Receiver:
    def __init__(self, lam: int, generator, rng: RngLike = None):
        self.lam, self.G = lam, generator
        self.rng = as_generator(rng)
        self.transcript: CommitTranscript | None = None

    def challenge(self) -> str:
        self.r = random_bits(3 * self.lam, self.rng)
        return self.r

    def receive(self, com: Sequence[str]):
        if len(com) != self.lam:
            raise ValueError(f"commitment must have {self.lam} blocks")
        self.transcript = CommitTranscript(self.r, tuple(com))

    def open(self, b: int, seeds: Sequence[str]) -> Verdict:
        self.transcript.b, self.transcript.seeds = b, tuple(seeds)
        return reveal_verify(self.transcript, self.G, self.rng)


class Committer:
    def __init__(self, lam: int, generator, rng: RngLike = None):
        self.lam, self.G = lam, generator
        self.rng = as_generator(rng)

    def commit(self, b: int, r: str) -> tuple[str, ...]:
        self.b = b
        self.seeds = tuple(random_bits(self.lam, self.rng) for _ in range(self.lam))
        return commit(b, r, self.seeds, self.G, self.rng)

    def decommit(self) -> tuple[int, tuple[str, ...]]:
        return self.b, self.seeds


def run_commitment(lam: int, b: int, generator, rng: RngLike = None, adversary: str = "none") -> CommitTranscript:
    """One honest commit/reveal session; ``adversary="flip-seeds"`` complements every revealed seed."""
    gen = as_generator(rng)
    c_rng, r_rng = split(gen, 2)
    receiver, committer = Receiver(lam, generator, r_rng), Committer(lam, generator, c_rng)
    r = receiver.challenge()
    receiver.receive(committer.commit(b, r))
    bit, seeds = committer.decommit()
    if adversary == "flip-seeds":
        seeds = tuple("".join("1" if ch == "0" else "0" for ch in k) for k in seeds)
    elif adversary != "none":
        raise ConfigError(f"unknown adversary {adversary!r}")
    receiver.open(bit, seeds)
    return receiver.transcript


# -- binding analysis -------------------------------------------------------------


def bad_set(toy: ToyGenerator) -> set[int]:
    """{F(k) XOR F(k')} over all key pairs, F the lexicographically-first modal output."""
    modal = np.array([toy.modal(k) for k in range(2**toy.lam)], dtype=np.int64)
    return set(np.unique(modal[:, None] ^ modal[None, :]).tolist())


@dataclass(frozen=True)
class CollisionSearch:
    r: int
    max_prob: float
    pair: tuple[int, int] | None
    in_bad: bool


def collision_prob(toy: ToyGenerator, k: int, k2: int, r: int) -> float:
    """Pr[G(k) XOR G(k') = r] for independent runs."""
    d2 = toy.dists[k2]
    return float(sum(p * d2.get(y ^ r, 0.0) for y, p in toy.dists[k].items()))


def binding_search(toy: ToyGenerator, r, bad: set[int] | None = None) -> CollisionSearch:
    """Exact max over key pairs of Pr[G(k) XOR G(k') = r]."""
    r = int(r, 2) if isinstance(r, str) else int(r)
    bad = bad_set(toy) if bad is None else bad
    # index outputs to visit only pairs with a nonzero term
    by_output: dict[int, list[tuple[int, float]]] = {}
    for k2, d in enumerate(toy.dists):
        for y, p in d.items():
            by_output.setdefault(y, []).append((k2, p))
    acc: dict[tuple[int, int], float] = {}
    for k, d in enumerate(toy.dists):
        for y, p in d.items():
            for k2, p2 in by_output.get(y ^ r, ()):
                acc[(k, k2)] = acc.get((k, k2), 0.0) + p * p2
    if not acc:
        return CollisionSearch(r, 0.0, None, r in bad)
    pair = min(acc, key=lambda kk: (-acc[kk], kk))
    return CollisionSearch(r, acc[pair], pair, r in bad)


def collision_table(toy: ToyGenerator) -> np.ndarray:
    """max_{k,k'} Pr[G(k) XOR G(k') = r] for every r in [0, 2^out_bits)."""
    if toy.out_bits > 24:
        raise ConfigError("collision table is limited to 24-bit outputs")
    table = np.zeros(2**toy.out_bits)
    sup = toy._supports
    for (o1, p1), (o2, p2) in itertools.product(sup, repeat=2):
        conv = np.zeros(2**toy.out_bits)
        np.add.at(conv, (o1[:, None] ^ o2[None, :]).ravel(), (p1[:, None] * p2[None, :]).ravel())
        np.maximum(table, conv, out=table)
    return table


def xi(n: int, p: float) -> float:
    """Pr[Binomial(n, p) >= ceil(2n/3)], by direct summation."""
    t = acceptance_threshold(n)
    return float(sum(math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(t, n + 1)))


def xi_by_enumeration(n: int, p: float) -> float:
    """Same quantity as :func:`xi`, summing over all 2^n per-block outcome patterns."""
    t = acceptance_threshold(n)
    total = 0.0
    for pattern in itertools.product((0, 1), repeat=n):
        j = sum(pattern)
        if j >= t:
            total += p**j * (1 - p) ** (n - j)
    return total


def double_open_probability(toy: ToyGenerator, method: str = "binomial") -> float:
    """E_r[ xi(lam, max_{k,k'} Pr[G(k) XOR G(k') = r]) ] for the best-collision committer.

    ``method="binomial"`` evaluates the tail with scipy; ``"enumeration"``
    walks every per-block acceptance pattern. Both are exact.
    """
    table = collision_table(toy)
    if method == "binomial":
        tail = stats.binom.sf(acceptance_threshold(toy.lam) - 1, toy.lam, table)
    elif method == "enumeration":
        tail = np.array([xi_by_enumeration(toy.lam, p) if p > 0 else 0.0 for p in table])
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.mean(tail))


def simulate_double_open(toy: ToyGenerator, trials: int, rng: RngLike = None) -> float:
    """Monte Carlo double-opening rate of the best-collision committer in the real protocol.

    Per trial: the receiver draws r; the committer picks the pair (k, k')
    maximising the collision probability, commits b=0 with k in every block,
    and tries to open as 0 with k and as 1 with k'. Success means both
    openings are accepted.
    """
    gen = as_generator(rng)
    lam = toy.lam
    bad = bad_set(toy)
    wins = 0
    for _ in range(trials):
        r = int(gen.integers(0, 2**toy.out_bits))
        found = binding_search(toy, r, bad)
        if found.pair is None:
            continue
        k, k2 = (format(x, f"0{lam}b") for x in found.pair)
        rb = toy.to_bits(r)
        com = commit(0, rb, [k] * lam, toy, gen)
        open0 = reveal_verify(CommitTranscript(rb, com, 0, (k,) * lam), toy, gen)
        open1 = reveal_verify(CommitTranscript(rb, com, 1, (k2,) * lam), toy, gen)
        wins += open0 is Verdict.ZERO and open1 is Verdict.ONE
    return wins / trials


# -- private-key encryption ---------------------------------------------------------


@dataclass(frozen=True)
class SkeCiphertext:
    r: str
    blocks: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps({"r": self.r, "blocks": list(self.blocks)})


@dataclass
class NonAdaptiveSKE:
    """c = (r, m XOR F(k_1, r), ..., m XOR F(k_lam, r)) with a fresh uniform nonce r."""

    lam: int
    prf: object
    nonce_len: int | None = None
    _m: int = field(init=False)

    def __post_init__(self):
        self._m = 2 * self.lam if self.nonce_len is None else self.nonce_len

    @property
    def ell(self) -> int:
        return self.prf.ell

    def gen(self, rng: RngLike = None) -> str:
        return random_bits(self.lam * self.lam, rng)

    def enc(self, key: str, m: str, rng: RngLike = None) -> SkeCiphertext:
        check_bits(m)
        if len(m) != self.ell:
            raise ValueError(f"message must have {self.ell} bits, got {len(m)}")
        seeds = _parse_key(key, self.lam)
        gen = as_generator(rng)
        r = random_bits(self._m, gen)
        streams = split(gen, self.lam)
        return SkeCiphertext(r, tuple(xor_bits(m, self.prf.prf(k, r, g)) for k, g in zip(seeds, streams)))

    def dec(self, key: str, ct: SkeCiphertext, rng: RngLike = None) -> Vote:
        seeds = _parse_key(key, self.lam)
        if len(ct.r) != self._m or len(ct.blocks) != self.lam or any(len(c) != self.ell for c in ct.blocks):
            raise ValueError("ciphertext shape does not match lambda, m and ell")
        streams = split(as_generator(rng), self.lam)
        return majority_string([xor_bits(c, self.prf.prf(k, ct.r, g)) for c, k, g in zip(ct.blocks, seeds, streams)])
