import json
import math

import numpy as np
import pytest

from coherence_shor.channels import (
    ChannelFamily,
    DimensionMismatch,
    NotCPTP,
    QuantumChannel,
    apply,
    adjoint_apply,
    assert_density,
    basis_state,
    channel_from_json,
    channel_to_dict,
    channel_to_json,
    choi,
    compose,
    dephase,
    dephasing_channel,
    from_choi,
    hadamard_channel,
    hadamard_like,
    identity_channel,
    is_di,
    is_mio,
    is_unital,
    mix,
    permutation_channel,
    phase_unitary,
    prep_standardize,
    tensor,
    unitary_channel,
)
from conftest import random_channel, random_density, random_di_channel, random_mio_channel

PLUS = np.full((2, 2), 0.5, dtype=complex)


class TestConstruction:
    def test_non_trace_preserving_rejected(self):
        with pytest.raises(NotCPTP):
            QuantumChannel((np.array([[1.0, 0.0], [0.0, 0.5]]),))

    def test_mismatched_shapes_rejected(self):
        with pytest.raises(DimensionMismatch):
            QuantumChannel((np.eye(2), np.eye(3)))

    def test_index_rep_definition(self, rng):
        chan = random_channel(rng)
        for n in range(2):
            for m in range(2):
                unit = np.zeros((2, 2), dtype=complex)
                unit[n, m] = 1.0
                out = apply(chan, unit)
                for k in range(2):
                    for l in range(2):
                        assert chan.index_rep[k, l, n, m] == pytest.approx(out[k, l], abs=1e-12)

    def test_random_channels_are_cptp(self, rng):
        for _ in range(20):
            chan = random_channel(rng, n_kraus=int(rng.integers(1, 4)))
            assert choi(chan).eigenvalues().min() > -1e-9
            assert np.allclose(choi(chan).output_partial_trace(), np.eye(2), atol=1e-10)


class TestApply:
    def test_identity(self, rng):
        rho = random_density(rng)
        assert np.allclose(apply(identity_channel(2), rho), rho)

    def test_hadamard_creates_plus(self):
        out = apply(hadamard_channel(), basis_state(0, 2))
        assert np.allclose(out, PLUS, atol=1e-12)

    def test_state_stays_valid(self, rng):
        for _ in range(10):
            out = apply(random_channel(rng), random_density(rng))
            assert_density(out)

    def test_adjoint_duality(self, rng):
        for _ in range(20):
            chan = random_channel(rng)
            rho = random_density(rng)
            h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            h = h + h.conj().T
            lhs = np.trace(h @ apply(chan, rho))
            rhs = np.trace(adjoint_apply(chan, h) @ rho)
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            apply(hadamard_channel(), np.eye(3))


class TestCompose:
    def test_matches_sequential_application(self, rng):
        a, b = random_channel(rng), random_channel(rng)
        rho = random_density(rng)
        assert np.allclose(apply(compose(b, a), rho), apply(b, apply(a, rho)), atol=1e-12)

    def test_composition_is_cptp(self, rng):
        chan = compose(random_channel(rng), random_channel(rng))
        assert choi(chan).eigenvalues().min() > -1e-9

    def test_tensor_action(self, rng):
        a, b = random_channel(rng), random_channel(rng)
        ra, rb = random_density(rng), random_density(rng)
        got = apply(tensor(a, b), np.kron(ra, rb))
        want = np.kron(apply(a, ra), apply(b, rb))
        assert np.allclose(got, want, atol=1e-12)


class TestChoi:
    def test_round_trip_on_basis(self, rng):
        for _ in range(5):
            chan = random_channel(rng, n_kraus=2)
            rebuilt = from_choi(choi(chan))
            for n in range(2):
                for m in range(2):
                    unit = np.zeros((2, 2), dtype=complex)
                    unit[n, m] = 1.0
                    assert np.allclose(apply(chan, unit), apply(rebuilt, unit), atol=1e-10)

    def test_rejects_non_psd(self):
        bad = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
        with pytest.raises(NotCPTP):
            from_choi(bad, in_dim=2, out_dim=2)

    def test_rejects_non_trace_preserving(self):
        # PSD but Tr_out != identity
        bad = np.diag([2.0, 0.0, 0.0, 0.0]).astype(complex)
        with pytest.raises(NotCPTP):
            from_choi(bad, in_dim=2, out_dim=2)


class TestFreeSets:
    def test_dephasing_is_free_everywhere(self):
        d = dephasing_channel(2)
        assert is_mio(d) and is_di(d) and is_unital(d)

    def test_hadamard_is_free_nowhere_but_unital(self):
        h = hadamard_channel()
        assert not is_mio(h) and not is_di(h) and is_unital(h)

    def test_permutations_are_free(self, rng):
        p = permutation_channel([1, 0])
        assert is_mio(p) and is_di(p) and is_unital(p)

    def test_replacement_channel_not_unital(self):
        # always outputs |0>: trace preserving but not unital
        k0 = np.array([[1, 0], [0, 0]], dtype=complex)
        k1 = np.array([[0, 1], [0, 0]], dtype=complex)
        chan = QuantumChannel((k0, k1))
        assert not is_unital(chan)
        assert is_mio(chan)  # constant incoherent output cannot create coherence

    def test_di_closed_under_composition(self, rng):
        for _ in range(20):
            a, b = random_di_channel(rng), random_di_channel(rng)
            assert is_di(a) and is_di(b) and is_di(compose(b, a))

    def test_mio_closed_under_composition(self, rng):
        for _ in range(20):
            a, b = random_mio_channel(rng), random_mio_channel(rng)
            assert is_mio(a) and is_mio(b) and is_mio(compose(b, a))

    def test_generic_channel_not_free(self, rng):
        # Haar-ish channels are almost surely neither MIO nor DI
        hits = sum(1 for _ in range(10) if not is_mio(random_channel(rng)))
        assert hits == 10


class TestDephase:
    def test_plus_to_maximally_mixed(self):
        assert np.allclose(dephase(PLUS), np.eye(2) / 2)

    def test_diagonal_fixed_point(self):
        rho = np.diag([0.3, 0.7]).astype(complex)
        assert np.allclose(dephase(rho), rho)

    def test_idempotent(self, rng):
        for _ in range(10):
            rho = random_density(rng, 3)
            assert np.allclose(dephase(dephase(rho)), dephase(rho))


class TestPrepStandardize:
    def test_hadamard_gives_plus(self):
        out = prep_standardize(hadamard_channel(), basis_state(0, 2))
        assert np.allclose(out, PLUS, atol=1e-12)

    def test_dephasing_gives_maximally_mixed(self):
        out = prep_standardize(dephasing_channel(2), np.diag([0.2, 0.8]).astype(complex))
        assert np.allclose(out, np.eye(2) / 2, atol=1e-12)

    def test_family_coherence(self):
        for p in (0.0, 0.3, 1.0):
            out = prep_standardize(ChannelFamily("prep", p).channel(), basis_state(0, 2))
            assert out[0, 1] == pytest.approx(p / 2, abs=1e-12)

    def test_output_form(self, rng):
        # 1/2 + c sigma_x exactly: no sigma_y / sigma_z component, c >= 0
        for _ in range(20):
            weights = rng.dirichlet(np.ones(2))
            sigma = np.diag(weights).astype(complex)
            out = prep_standardize(random_channel(rng), sigma)
            assert abs(out[0, 0] - 0.5) < 1e-12 and abs(out[1, 1] - 0.5) < 1e-12
            assert abs(out[0, 1].imag) < 1e-12
            assert out[0, 1].real >= -1e-12
            assert abs(out[0, 1] - out[1, 0].conjugate()) < 1e-12

    def test_rejects_coherent_input(self):
        with pytest.raises(ValueError):
            prep_standardize(hadamard_channel(), PLUS)


class TestHadamardLike:
    def test_hadamard_unchanged(self):
        # H_00^01 = 1/2 > 0, so the aligning phase is zero
        out = hadamard_like(hadamard_channel())
        assert np.allclose(out.index_rep, hadamard_channel().index_rep, atol=1e-12)

    def test_counterexample_theta_phase(self):
        from coherence_shor.measures import counterexample_theta

        theta = counterexample_theta()
        assert theta.index_rep[0, 0, 0, 1] == pytest.approx(0.5j, abs=1e-12)
        aligned = hadamard_like(theta)
        manual = compose(theta, phase_unitary([0.0, math.pi / 2]))
        assert np.allclose(aligned.index_rep, manual.index_rep, atol=1e-12)

    def test_identity_on_matrix_units(self, rng):
        # Delta S2[L](|n><m|) = sum_k |L_kk^nm| e^{i pi k (n-m)} |k><k|
        for _ in range(20):
            lam = random_channel(rng)
            rep = hadamard_like(lam).index_rep
            for n in range(2):
                for m in range(2):
                    for k in range(2):
                        want = abs(lam.index_rep[k, k, n, m]) * np.exp(1j * math.pi * k * (n - m))
                        assert rep[k, k, n, m] == pytest.approx(want, abs=1e-10)

    def test_degenerate_phase_is_not_an_error(self):
        out = hadamard_like(dephasing_channel(2))
        assert np.allclose(out.index_rep, dephasing_channel(2).index_rep, atol=1e-12)

    def test_di_preserved(self, rng):
        for _ in range(10):
            lam = random_di_channel(rng)
            assert is_di(hadamard_like(lam))


class TestChannelFamily:
    def test_endpoints(self):
        assert np.allclose(
            ChannelFamily("prep", 1.0).channel().index_rep, hadamard_channel().index_rep, atol=1e-12
        )
        assert np.allclose(
            ChannelFamily("detect", 0.0).channel().index_rep, dephasing_channel(2).index_rep, atol=1e-12
        )

    def test_cptp_and_unital_for_all_p(self):
        for p in np.linspace(0, 1, 11):
            chan = ChannelFamily("detect", float(p)).channel()
            assert is_unital(chan)
            assert choi(chan).eigenvalues().min() > -1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            ChannelFamily("prep", 1.5)
        with pytest.raises(ValueError):
            ChannelFamily("other", 0.5)


class TestSerialization:
    def test_kraus_round_trip_bit_exact(self):
        chan = ChannelFamily("prep", 0.25).channel()
        rebuilt = channel_from_json(channel_to_json(chan))
        assert len(rebuilt.kraus) == len(chan.kraus)
        for a, b in zip(chan.kraus, rebuilt.kraus):
            assert np.array_equal(a, b)  # bit exact, no tolerance

    def test_family_round_trip(self):
        fam = ChannelFamily("detect", 0.375)
        rebuilt = channel_from_json(channel_to_json(fam))
        assert rebuilt == fam

    def test_schema(self):
        data = channel_to_dict(identity_channel(2))
        assert data["kind"] == "kraus"
        assert data["dims"] == [2, 2]
        assert data["matrices"] == [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]
        fam = channel_to_dict(ChannelFamily("prep", 0.5))
        assert fam == {"kind": "family", "family": "prep", "p": 0.5}

    def test_counterexample_phi_round_trip(self):
        from coherence_shor.measures import counterexample_phi

        phi = counterexample_phi()
        rebuilt = channel_from_json(channel_to_json(phi))
        assert np.allclose(rebuilt.index_rep, phi.index_rep, atol=1e-12)


class TestMix:
    def test_weights_validated(self):
        with pytest.raises(ValueError):
            mix([identity_channel(2)], [0.5])

    def test_action_is_convex_combination(self, rng):
        a, b = random_channel(rng), random_channel(rng)
        rho = random_density(rng)
        got = apply(mix([a, b], [0.3, 0.7]), rho)
        want = 0.3 * apply(a, rho) + 0.7 * apply(b, rho)
        assert np.allclose(got, want, atol=1e-12)
