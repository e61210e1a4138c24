import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pseudodet import states
from pseudodet.errors import DimensionMismatchError, InvalidDimensionError, RoleMismatchError
from pseudodet.states import (
    DensityMatrix,
    PureState,
    SeedKey,
    SeedRole,
    basis_state,
    fidelity,
    haar_amplitudes,
    random_density_matrix,
    sample_haar,
    seeded_prfs_state,
    seeded_state,
    trace_distance,
)


def test_sample_haar_is_normalised(rng):
    psi = sample_haar(4, rng)
    assert psi.dim == 4
    assert abs(np.vdot(psi.amplitudes, psi.amplitudes).real - 1) < 1e-12


@pytest.mark.parametrize("dim", [0, 1, -3])
def test_sample_haar_rejects_small_dimension(dim, rng):
    with pytest.raises(InvalidDimensionError):
        sample_haar(dim, rng)


def test_state_is_immutable(rng):
    psi = sample_haar(8, rng)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1.0


def test_unnormalised_amplitudes_rejected():
    with pytest.raises(ValueError):
        PureState(np.array([1.0, 1.0]))
    assert PureState.from_amplitudes([1.0, 1.0]).dim == 2


def test_haar_first_coordinate_mean(rng):
    # E|alpha_1|^2 = 1/d by symmetry; Var|alpha_1|^2 = (d-1)/(d^2 (d+1))
    d, n = 64, 100_000
    p1 = np.concatenate([np.abs(a[:, 0]) ** 2 for a in states.haar_amplitude_chunks(d, n, rng)])
    sigma = np.sqrt((d - 1) / (d**2 * (d + 1)) / n)
    assert abs(p1.mean() - 1 / d) <= 3 * sigma


@pytest.mark.slow
def test_haar_real_part_is_gaussian(rng):
    d, n = 256, 100_000
    re = np.concatenate([a[:, 0].real for a in states.haar_amplitude_chunks(d, n, rng)])
    ks = stats.kstest(re, stats.norm(0, np.sqrt(1 / (2 * d))).cdf)
    assert ks.statistic <= 0.01


def test_unitary_invariance(rng):
    d, n = 8, 100_000
    amps = haar_amplitudes(d, n, rng)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    u, _ = np.linalg.qr(g)
    rotated = amps @ u.T
    res = stats.ks_2samp(np.abs(rotated[:, 0]) ** 2, np.abs(amps[:, 0]) ** 2)
    assert res.pvalue > 0.001


def test_sample_haar_and_seeded_state_share_one_procedure(monkeypatch, rng):
    calls = []
    real = states._gaussian_amplitudes

    def spy(words):
        calls.append(np.asarray(words).shape)
        return real(words)

    monkeypatch.setattr(states, "_gaussian_amplitudes", spy)
    sample_haar(16, rng)
    seeded_state(SeedKey("0101"), 16)
    seeded_prfs_state(SeedKey("0101"), "11", 16)
    haar_amplitudes(16, 3, rng)
    assert calls == [(32,), (32,), (32,), (3, 32)]


def test_gaussian_amplitudes_box_muller_by_hand():
    w0, w1 = np.uint64(2**63), np.uint64(2**62)
    u1 = ((int(w0) >> 11) + 1) * 2.0**-53
    u2 = (int(w1) >> 11) * 2.0**-53
    z = np.sqrt(-2 * np.log(u1)) * np.exp(2j * np.pi * u2)
    words = np.array([w0, w1, w1, w0], dtype=np.uint64)
    amps = states._gaussian_amplitudes(words)
    u1b, u2b = ((int(w1) >> 11) + 1) * 2.0**-53, (int(w0) >> 11) * 2.0**-53
    z2 = np.sqrt(-2 * np.log(u1b)) * np.exp(2j * np.pi * u2b)
    expected = np.array([z, z2]) / np.linalg.norm([z, z2])
    np.testing.assert_allclose(amps, expected, rtol=0, atol=1e-15)


class TestSeeded:
    def test_deterministic(self):
        k = SeedKey("1011001110001111")
        a, b = seeded_state(k, 64), seeded_state(k, 64)
        assert a.amplitudes.tobytes() == b.amplitudes.tobytes()

    def test_golden_values(self):
        # frozen regression values for the keyed Philox4x64-10 / SHA-256 construction
        a = seeded_state(SeedKey("0" * 8), 64)
        b = seeded_state(SeedKey("1" * 8), 64)
        assert a.amplitudes[0] == pytest.approx(0.01900122770599576 - 0.05892736902082348j, abs=1e-15)
        assert fidelity(a, b) == pytest.approx(0.006454198010509872, abs=1e-14)
        assert fidelity(a, b) < 0.5

    def test_role_mismatch(self):
        with pytest.raises(RoleMismatchError):
            seeded_state(SeedKey("0101", SeedRole.QPRF), 8)

    def test_mean_matches_haar_moment(self, rng):
        d, n = 64, 10_000
        p1 = np.array([abs(seeded_state(SeedKey(format(int(x), "064b")), d).amplitudes[0]) ** 2
                       for x in rng.integers(0, 2**63, size=n)])
        sigma = np.sqrt((d - 1) / (d**2 * (d + 1)) / n)
        assert abs(p1.mean() - 1 / d) <= 3 * sigma

    def test_prfs_deterministic_and_input_sensitive(self):
        k = SeedKey("0110")
        assert seeded_prfs_state(k, "0000", 64) == seeded_prfs_state(k, "0000", 64)
        f = fidelity(seeded_prfs_state(k, "0000", 64), seeded_prfs_state(k, "0001", 64))
        assert f == pytest.approx(0.01908049598900284, abs=1e-14)
        assert f < 0.5

    def test_prfs_differs_from_prs_for_same_key(self):
        k = SeedKey("0110")
        assert seeded_prfs_state(k, "", 16) != seeded_state(k, 16)

    def test_prfs_input_length_checked(self):
        with pytest.raises(ValueError):
            seeded_prfs_state(SeedKey("01"), "010", 8, input_len=4)

    def test_prfs_mean_matches_haar_moment(self, rng):
        d, n = 64, 10_000
        p1 = []
        for _ in range(n):
            key = SeedKey("".join(map(str, rng.integers(0, 2, 32))))
            x = "".join(map(str, rng.integers(0, 2, 64)))
            p1.append(abs(seeded_prfs_state(key, x, d).amplitudes[0]) ** 2)
        sigma = np.sqrt((d - 1) / (d**2 * (d + 1)) / n)
        assert abs(np.mean(p1) - 1 / d) <= 3 * sigma


class TestSeedKey:
    def test_lengths_by_role(self):
        assert SeedKey("0" * 4, SeedRole.QPRF).check(2) is not None
        assert SeedKey("0" * 6, SeedRole.AMPLIFIED).check(2, s=3) is not None
        with pytest.raises(ValueError):
            SeedKey("0" * 5, SeedRole.QPRF).check(2)

    def test_parse_left_to_right(self):
        parts = SeedKey("000111", SeedRole.QPRF).parse(2)
        assert [p.bits for p in parts] == ["00", "01", "11"]

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            SeedKey("012")


class TestTraceDistance:
    def test_identity(self, rng):
        rho = random_density_matrix(4, rng)
        assert trace_distance(rho, rho) == 0

    def test_orthogonal(self):
        assert trace_distance(basis_state(2, 0), basis_state(2, 1)) == pytest.approx(1.0, abs=1e-12)

    def test_zero_vs_plus(self):
        plus = PureState.from_amplitudes([1, 1])
        td = trace_distance(basis_state(2, 0), plus)
        # eigen-decomposition oracle of the Hermitian difference
        diff = basis_state(2, 0).density_matrix().entries - plus.density_matrix().entries
        oracle = 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum()
        assert td == pytest.approx(1 / np.sqrt(2), abs=1e-9)
        assert td == pytest.approx(oracle, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            trace_distance(basis_state(2), basis_state(3))

    def test_symmetric_and_dominates_diagonal(self, rng):
        for _ in range(1000):
            d = int(rng.integers(2, 6))
            a, b = random_density_matrix(d, rng), random_density_matrix(d, rng)
            td = trace_distance(a, b)
            assert td == pytest.approx(trace_distance(b, a), abs=1e-12)
            assert 0 <= td <= 1 + 1e-12
            assert np.max(np.abs(a.diagonal - b.diagonal)) <= td + 1e-9


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 32), st.integers(0, 2**32 - 1))
def test_serialisation_roundtrip(dim, seed):
    psi = sample_haar(dim, seed)
    assert PureState.from_bytes(psi.to_bytes()) == psi
    assert PureState.from_json(psi.to_json()) == psi


def test_binary_layout_is_interleaved_little_endian():
    psi = PureState(np.array([0.6, 0.8j]))
    raw = psi.to_bytes()
    assert np.frombuffer(raw, "<f8").tolist() == [0.6, 0.0, 0.0, 0.8]


def test_pack_unpack(rng):
    batch = [sample_haar(4, rng) for _ in range(3)]
    assert states.unpack_states(states.pack_states(batch)) == batch
