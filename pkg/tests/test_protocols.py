import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pseudodet.errors import ConfigError
from pseudodet.generators import QprgConfig
from pseudodet.montecarlo import haar_batch
from pseudodet.protocols import (
    CommitTranscript,
    NonAdaptiveSKE,
    PseudorandomOTP,
    QprgPad,
    SyntheticGenerator,
    ToyGenerator,
    Verdict,
    acceptance_threshold,
    bad_set,
    binding_search,
    collision_prob,
    collision_table,
    commit,
    double_open_probability,
    majority_string,
    reveal_verify,
    run_commitment,
    simulate_double_open,
    xi,
    xi_by_enumeration,
)
from pseudodet.rng import random_bits, xor_bits
from pseudodet.stats import bit_alphabet, bit_counts, EmpiricalDistribution, tv_empirical
from pseudodet.calibration import constant


class TestMajority:
    def test_strict(self):
        v = majority_string(["01", "01", "11"])
        assert v.winner == "01" and v.count == 2 and not v.low_confidence

    def test_tie_goes_lexicographic(self):
        v = majority_string(["11", "01"])
        assert v.winner == "01" and v.low_confidence

    def test_plurality(self):
        strings = ["10"] * 60 + ["01"] * 25 + ["11"] * 15
        assert majority_string(strings).winner == "10"

    def test_errors(self):
        with pytest.raises(ValueError):
            majority_string([])
        with pytest.raises(ValueError):
            majority_string(["0", "01"])


PAD64 = QprgPad(QprgConfig(lam=8, dim=64))


class TestPotp:
    def test_roundtrip_exact(self, rng):
        scheme = PseudorandomOTP(8, PAD64)
        for _ in range(100):
            key, m = scheme.gen(rng), random_bits(PAD64.ell, rng)
            assert scheme.dec(key, scheme.enc(key, m, rng), rng).winner == m

    def test_zero_message_exposes_pads(self, rng):
        scheme = PseudorandomOTP(8, PAD64)
        key = scheme.gen(rng)
        ct = scheme.enc(key, "00", rng)
        assert ct.blocks == tuple(PAD64(key[i:i + 8]) for i in range(0, 64, 8))
        assert json.loads(ct.to_json())["blocks"] == list(ct.blocks)

    def test_length_checks(self, rng):
        scheme = PseudorandomOTP(8, PAD64)
        with pytest.raises(ValueError):
            scheme.enc(scheme.gen(rng), "000", rng)
        with pytest.raises(ValueError):
            scheme.enc("0" * 63, "00", rng)

    def test_faithful_stretch(self):
        with pytest.raises(ConfigError):
            PseudorandomOTP(8, PAD64, faithful=True)

    @pytest.mark.slow
    def test_synthetic_disagreement(self, rng):
        G = SyntheticGenerator.for_agreement(64, 0.9)
        scheme = PseudorandomOTP(64, G)
        ok = 0
        for _ in range(10_000):
            key, m = scheme.gen(rng), random_bits(64, rng)
            ok += scheme.dec(key, scheme.enc(key, m, rng), rng).winner == m
        assert ok / 10_000 >= 0.999


class TestSke:
    def test_roundtrip_exact(self, rng):
        scheme = NonAdaptiveSKE(8, PAD64)
        for _ in range(100):
            key, m = scheme.gen(rng), random_bits(PAD64.ell, rng)
            ct = scheme.enc(key, m, rng)
            assert len(ct.r) == 16
            assert scheme.dec(key, ct, rng).winner == m

    def test_fresh_nonces(self, rng):
        scheme = NonAdaptiveSKE(8, PAD64)
        key = scheme.gen(rng)
        nonces = [scheme.enc(key, "10", rng).r for _ in range(200)]
        # 200 draws of 16 bits: expected colliding pairs ~0.3
        assert len(set(nonces)) >= 197

    def test_shape_checks(self, rng):
        scheme = NonAdaptiveSKE(8, PAD64)
        key = scheme.gen(rng)
        ct = scheme.enc(key, "10", rng)
        with pytest.raises(ValueError):
            scheme.dec(key, type(ct)(ct.r[:-1], ct.blocks), rng)

    @pytest.mark.slow
    def test_synthetic_disagreement(self, rng):
        scheme = NonAdaptiveSKE(64, SyntheticGenerator.for_agreement(64, 0.9))
        ok = 0
        for _ in range(10_000):
            key, m = scheme.gen(rng), random_bits(64, rng)
            ok += scheme.dec(key, scheme.enc(key, m, rng), rng).winner == m
        assert ok / 10_000 >= 0.999


class TestCommit:
    G = SyntheticGenerator(12)  # fidelity 1: deterministic pads

    def test_b0_raw_outputs(self, rng):
        seeds = [random_bits(4, rng) for _ in range(4)]
        r = random_bits(12, rng)
        assert commit(0, r, seeds, self.G) == tuple(self.G(k) for k in seeds)

    def test_zero_r_makes_bits_indistinct(self, rng):
        seeds = [random_bits(4, rng) for _ in range(4)]
        assert commit(1, "0" * 12, seeds, self.G) == commit(0, "0" * 12, seeds, self.G)

    def test_b1_involution(self, rng):
        seeds = [random_bits(4, rng) for _ in range(4)]
        r = random_bits(12, rng)
        for block, k in zip(commit(1, r, seeds, self.G), seeds):
            assert xor_bits(block, r) == self.G(k)

    def test_length_misconfiguration(self):
        with pytest.raises(ConfigError):
            commit(0, "0" * 12, ["0000"] * 5, self.G)

    def test_honest_exact(self, rng):
        for b in (0, 1):
            t = run_commitment(4, b, self.G, rng)
            assert t.matches == 4 and t.verdict == Verdict(str(b))

    def test_malformed_rejects(self, rng):
        t = run_commitment(4, 1, self.G, rng)
        bad = CommitTranscript(t.r, t.com, 1, t.seeds[:2])
        assert reveal_verify(bad, self.G) is Verdict.REJECT
        bad = CommitTranscript(t.r, t.com, 1, ("01x0",) * 4)
        assert reveal_verify(bad, self.G) is Verdict.REJECT

    def test_transcript_json(self, rng):
        t = run_commitment(4, 1, self.G, rng)
        assert CommitTranscript.from_json(t.to_json()) == t

    def test_threshold(self):
        assert [acceptance_threshold(n) for n in (3, 4, 12, 30)] == [2, 3, 8, 20]

    def test_flip_seeds_rejected(self, rng):
        G = SyntheticGenerator(3 * 16)
        verdicts = [run_commitment(16, int(rng.integers(2)), G, rng, "flip-seeds").verdict for _ in range(200)]
        assert all(v is Verdict.REJECT for v in verdicts)

    def test_flip_seeds_toy(self, rng):
        toy = ToyGenerator.random(4, rng, deterministic=True)
        rejects = sum(run_commitment(4, 0, toy, rng, "flip-seeds").verdict is Verdict.REJECT for _ in range(200))
        # flipped seeds collide with the original output only when F(k) = F(~k)
        assert rejects >= 190

    @pytest.mark.slow
    def test_honest_accept_rate_at_agreement_09(self, rng):
        G = SyntheticGenerator.for_agreement(90, 0.9)
        accepted = sum(run_commitment(30, 1, G, rng).verdict is Verdict.ONE for _ in range(1000))
        assert accepted / 1000 >= 0.99


class TestBinding:
    def test_deterministic_off_bad_is_zero(self, rng):
        toy = ToyGenerator.random(3, rng, deterministic=True)
        bad = bad_set(toy)
        for r in range(2**9):
            res = binding_search(toy, r, bad)
            assert res.in_bad == (r in bad)
            if r not in bad:
                assert res.max_prob == 0.0

    @pytest.mark.parametrize("lam", [2, 4])
    def test_bad_set_fraction(self, lam, rng):
        for _ in range(5):
            toy = ToyGenerator.random(lam, rng)
            assert len(bad_set(toy)) <= 2 ** (2 * lam)
            assert len(bad_set(toy)) / 2 ** (3 * lam) <= 2.0**-lam

    @pytest.mark.parametrize("lam", [2, 4])
    def test_collision_at_most_half_off_bad(self, lam, rng):
        for _ in range(5):
            toy = ToyGenerator.random(lam, rng, min_modal=0.05)
            table = collision_table(toy)
            off = np.ones(table.size, bool)
            off[list(bad_set(toy))] = False
            assert table[off].max() <= 0.5

    def test_search_matches_table(self, rng):
        toy = ToyGenerator.random(2, rng)
        table = collision_table(toy)
        for r in range(2**6):
            res = binding_search(toy, toy.to_bits(r))
            assert res.max_prob == pytest.approx(table[r], abs=1e-15)
            if res.pair is not None:
                assert collision_prob(toy, *res.pair, r) == pytest.approx(res.max_prob, abs=1e-15)

    def test_key_space_limit(self):
        with pytest.raises(ConfigError):
            ToyGenerator(13, 39, [{0: 1.0}] * 2**13)

    @pytest.mark.parametrize("n", [3, 4, 7, 12])
    def test_xi_two_routes(self, n):
        for p in (0.0, 0.1, 0.5, 0.77, 1.0):
            assert xi(n, p) == pytest.approx(xi_by_enumeration(n, p), abs=1e-14)
            assert xi(n, p) == pytest.approx(stats.binom.sf(acceptance_threshold(n) - 1, n, p), abs=1e-14)

    def test_xi_half_decays(self):
        vals = [xi(n, 0.5) for n in (12, 24, 48, 96)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 2**-5

    def test_double_open_exact_routes_agree(self, rng):
        toy = ToyGenerator.random(4, rng)
        a = double_open_probability(toy)
        b = double_open_probability(toy, method="enumeration")
        assert abs(a - b) <= 1e-12

    def test_simulation_below_exact_bound(self, rng):
        # the simulated committer also has to pass its own honest opening, so it can only do worse
        toy = ToyGenerator.random(4, rng, min_modal=0.05)
        exact = double_open_probability(toy)
        sim = simulate_double_open(toy, 3000, rng)
        assert sim <= exact + 4 * np.sqrt(max(exact, 1e-3) / 3000)

    @pytest.mark.slow
    def test_double_open_lambda12(self, rng):
        toy = ToyGenerator.random(12, rng)
        assert simulate_double_open(toy, 60, rng) <= xi(12, 0.5)


def _lexmax(p):
    return int(np.flatnonzero(p == p.max())[0])


simplex = st.integers(2, 8).flatmap(
    lambda n: st.tuples(*[st.lists(st.floats(0, 1), min_size=n, max_size=n).filter(lambda v: sum(v) > 0)] * 2)
)


@settings(max_examples=500, deadline=None)
@given(simplex)
def test_inner_product_bound(pair):
    p, q = (np.asarray(v) / sum(v) for v in pair)
    if _lexmax(p) != _lexmax(q):
        assert p @ q <= 0.5 + 1e-12


def test_inner_product_bound_bulk(rng):
    n = rng.integers(2, 9, size=100_000)
    violations = 0
    for size in range(2, 9):
        m = int((n == size).sum())
        p = rng.dirichlet(np.ones(size), m)
        q = rng.dirichlet(np.ones(size), m)
        distinct = p.argmax(1) != q.argmax(1)
        violations += int(np.sum(np.einsum("ij,ij->i", p, q)[distinct] > 0.5))
    assert violations == 0


def test_inner_product_bound_near_ties():
    # exact rationals: p = (1/2, 1/2) against q = (1/2 - b, 1/2 + b) meets the bound with equality
    half = Fraction(1, 2)
    eps = [Fraction(0), Fraction(1, 10**12), Fraction(1, 10**9), Fraction(1, 10**6), Fraction(1, 1000)]
    violations = equalities = 0
    for n in range(2, 9):
        for a, b in itertools.product(eps, repeat=2):
            p = [half + a, half - a] + [Fraction(0)] * (n - 2)
            q = [half - b, half + b] + [Fraction(0)] * (n - 2)
            if p.index(max(p)) != q.index(max(q)):
                inner = sum(x * y for x, y in zip(p, q))
                violations += inner > half
                equalities += inner == half
    assert violations == 0
    assert equalities > 0


@pytest.mark.slow
def test_statistical_hiding_haar_pads(rng):
    pads = haar_batch(4096, 40_000, rng).bits
    ell = pads.shape[1]
    m0, m1 = np.zeros(ell, np.uint8), np.ones(ell, np.uint8)
    c0 = pads[:20_000] ^ m0
    c1 = pads[20_000:] ^ m1
    alphabet = bit_alphabet(ell)
    e0 = EmpiricalDistribution(alphabet, tuple(int(c) for c in bit_counts(c0)))
    e1 = EmpiricalDistribution(alphabet, tuple(int(c) for c in bit_counts(c1)))
    assert tv_empirical(e0, e1).value <= 2 * constant("uniform_tv_constant") * 4096 ** (-1 / 6)
