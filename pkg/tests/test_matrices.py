import numpy as np
import pytest

import multiport as mp
from multiport.errors import GaugeAnchorError, ShapeError, ValidationError

from devices import characterized_mmi_4x4, unitaries_with_anchors


class TestMakeTransitionMatrix:
    def test_1x1_identity(self):
        m = mp.make_transition_matrix([[1]])
        assert m.n_inputs == 1 and m.n_outputs == 1
        assert m.entries[0, 0] == 1 + 0j

    def test_balanced_2x2_grid(self):
        s = 1 / np.sqrt(2)
        m = mp.make_transition_matrix([[s, 1j * s], [1j * s, s]])
        assert np.allclose(np.abs(m.entries), s)

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            mp.make_transition_matrix([[1.0, np.nan], [0.0, 1.0]])

    def test_inf_rejected(self):
        with pytest.raises(ValidationError):
            mp.make_transition_matrix([[1.0, np.inf], [0.0, 1.0]])

    def test_ragged_rejected(self):
        with pytest.raises(ShapeError):
            mp.make_transition_matrix([[1.0, 2.0], [3.0]])

    def test_dimensions_derived_from_grid(self):
        m = mp.make_transition_matrix(np.ones((2, 5)))
        assert (m.n_inputs, m.n_outputs) == (2, 5)

    def test_unitary_flag_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            mp.make_transition_matrix([[1.0, 0.0], [0.0, 2.0]], unitary=True)

    def test_entries_read_only(self):
        m = mp.make_transition_matrix([[1.0]])
        with pytest.raises(ValueError):
            m.entries[0, 0] = 2.0

    def test_amplitude_is_one_based(self):
        m = mp.make_transition_matrix([[1.0, 2.0], [3.0, 4.0]])
        assert m.amplitude(2, 1) == 3 + 0j
        with pytest.raises(IndexError):
            m.amplitude(3, 1)


class TestIdealSplitters:
    def test_2x2_entries(self):
        m = mp.ideal_2x2()
        s = 1 / np.sqrt(2)
        assert m.amplitude(1, 1) == pytest.approx(s + 0j)
        assert abs(m.amplitude(1, 2)) ** 2 == pytest.approx(0.5)
        assert m.unitary

    def test_2x2_unitarity(self):
        m = mp.ideal_2x2().entries
        assert np.max(np.abs(m @ m.conj().T - np.eye(2))) < 1e-12

    def test_4x4_theta_zero_real(self):
        m = mp.ideal_4x4(0.0)
        assert np.allclose(m.entries.imag, 0.0)
        assert np.allclose(np.abs(m.entries), 0.5)

    def test_4x4_single_photon_probabilities(self):
        m = mp.ideal_4x4(1.234)
        assert np.allclose(np.abs(m.entries) ** 2, 0.25)

    def test_4x4_unitarity_over_random_thetas(self):
        rng = np.random.default_rng(20240501)
        eye = np.eye(4)
        for theta in rng.uniform(-np.pi, np.pi, 1000):
            u = mp.ideal_4x4(theta).entries
            assert np.max(np.abs(u @ u.conj().T - eye)) < 1e-12

    def test_4x4_nonfinite_theta(self):
        with pytest.raises(ValidationError):
            mp.ideal_4x4(np.nan)


class TestCanonicalGauge:
    def test_ideal_2x2_representative(self):
        g = mp.canonical_gauge(mp.ideal_2x2())
        s = 1 / np.sqrt(2)
        expected = np.array([[s, s], [s, -s]])
        assert np.max(np.abs(g.representative.entries - expected)) < 1e-12
        phase_22 = np.angle(g.representative.entries[1, 1])
        assert 0.0 <= phase_22 <= np.pi

    def test_characterized_fixture_already_canonical(self):
        fixture = characterized_mmi_4x4()
        g = mp.canonical_gauge(fixture)
        assert np.max(np.abs(g.representative.entries - fixture.entries)) < 1e-12
        assert not g.conjugated

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            m = mp.make_transition_matrix(
                rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            )
            rep = mp.canonical_gauge(m).representative
            again = mp.canonical_gauge(rep).representative
            assert np.max(np.abs(again.entries - rep.entries)) < 1e-12

    def test_preserves_magnitudes(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = mp.make_transition_matrix(
                rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
            )
            rep = mp.canonical_gauge(m).representative
            assert np.max(np.abs(np.abs(rep.entries) - np.abs(m.entries))) < 1e-15

    def test_first_row_and_column_exactly_real(self):
        m = mp.random_unitary(4, 3)
        rep = mp.canonical_gauge(m).representative.entries
        assert np.all(rep[0, :].imag == 0.0)
        assert np.all(rep[:, 0].imag == 0.0)
        assert np.all(rep[0, :].real >= 0.0)
        assert np.all(rep[:, 0].real >= 0.0)

    def test_zero_anchor_error_names_index(self):
        m = mp.make_transition_matrix([[1.0, 0.0], [1.0, 1.0]])
        with pytest.raises(GaugeAnchorError, match="output 2"):
            mp.canonical_gauge(m)


class TestGaugeEquivalence:
    def test_global_phase(self):
        m = mp.random_unitary(4, 21)
        rotated = mp.make_transition_matrix(np.exp(1j * 0.912) * m.entries)
        assert mp.gauge_equivalent(m, rotated, 1e-9)

    def test_conjugation_folded(self):
        m = mp.random_unitary(4, 22)
        assert mp.gauge_equivalent(m, m.conjugate(), 1e-9)

    def test_diagonal_phases(self):
        rng = np.random.default_rng(23)
        for seed, m in unitaries_with_anchors(10, seed_start=100):
            d1 = np.exp(1j * rng.uniform(-np.pi, np.pi, 4))
            d2 = np.exp(1j * rng.uniform(-np.pi, np.pi, 4))
            transformed = mp.make_transition_matrix(d1[:, None] * m.entries * d2[None, :])
            assert mp.gauge_equivalent(m, transformed, 1e-9), f"seed {seed}"

    def test_distinct_classes(self):
        assert not mp.gauge_equivalent(mp.ideal_4x4(0.0), mp.ideal_4x4(np.pi / 2), 1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            mp.gauge_equivalent(mp.ideal_2x2(), mp.ideal_4x4(0.0), 1e-9)


class TestRandomUnitary:
    def test_single_mode(self):
        m = mp.random_unitary(1, 5)
        assert abs(abs(m.entries[0, 0]) - 1.0) < 1e-12

    def test_row_norms(self):
        m = mp.random_unitary(4, 5)
        norms = np.linalg.norm(m.entries, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-10)

    def test_deterministic(self):
        a = mp.random_unitary(4, 99)
        b = mp.random_unitary(4, 99)
        assert np.array_equal(a.entries, b.entries)

    def test_seed_changes_matrix(self):
        a = mp.random_unitary(4, 1)
        b = mp.random_unitary(4, 2)
        assert not np.allclose(a.entries, b.entries)

    def test_zero_size_rejected(self):
        with pytest.raises(ValidationError):
            mp.random_unitary(0, 1)
