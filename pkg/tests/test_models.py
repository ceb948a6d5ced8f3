import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qubus import hilbert as hs
from qubus import models as md
from qubus.errors import SingularDetuningError


FIG2_DRESSED = md.SystemParams(g=5e-3, Delta_R=0.05, gamma_q=1e-4, gamma_h=1e-4)


class TestBoseEinstein:
    def test_zero_temperature(self):
        assert md.bose_einstein(1.0, 0.0) == 0.0

    def test_algebraic_inversions(self):
        assert md.bose_einstein(1.0, 1.0 / math.log(2.0)) == pytest.approx(1.0, rel=1e-12)
        assert md.bose_einstein(1.0, 1.0 / math.log(1.5)) == pytest.approx(2.0, rel=1e-12)


class TestSystemParams:
    def test_detuning_resolution(self):
        p = md.SystemParams(Delta_R=0.05)
        assert p.Omega_R == pytest.approx(1.05)
        p2 = md.SystemParams(Omega_R=0.95)
        assert p2.Delta_R == pytest.approx(-0.05)

    def test_drive_detuning_resolution(self):
        p = md.SystemParams(omega_q=50.0, omega_d=50.01)
        assert p.Delta == pytest.approx(0.01)
        p2 = md.SystemParams(omega_q=50.0, Delta=0.01)
        assert p2.omega_d == pytest.approx(50.01)

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ValueError):
            md.SystemParams(Omega_R=1.05, Delta_R=0.04)
        with pytest.raises(ValueError):
            md.SystemParams(omega_q=50.0, omega_d=50.01, Delta=0.02)

    def test_negative_rates_rejected(self):
        with pytest.raises(ValueError):
            md.SystemParams(gamma_q=-1e-4)
        with pytest.raises(ValueError):
            md.SystemParams(n_th_h=-0.5)

    def test_occupations_from_temperature(self):
        p = md.SystemParams(omega_q=1.05, T=1.0 / math.log(2.0))
        assert p.n_th_h == pytest.approx(1.0, rel=1e-12)
        assert p.n_th_q == pytest.approx(1.0 / (2.0 ** 1.05 - 1.0), rel=1e-12)

    def test_replace_reresolves(self):
        p = FIG2_DRESSED.replace(Delta_R=-0.05)
        assert p.Omega_R == pytest.approx(0.95)
        p2 = FIG2_DRESSED.replace(Omega_R=1.1)
        assert p2.Delta_R == pytest.approx(0.1)

    def test_symmetry_helpers(self):
        assert FIG2_DRESSED.is_symmetric()
        assert not FIG2_DRESSED.replace(g_2=1e-3).is_symmetric()


class TestDerivedQuantities:
    def test_dispersive_shift(self):
        assert md.dispersive_shift(FIG2_DRESSED) == pytest.approx(5e-4, rel=1e-12)
        assert md.dispersive_shift(FIG2_DRESSED.replace(g=0.0)) == 0.0
        assert md.dispersive_shift(FIG2_DRESSED.replace(Delta_R=-0.05)) == pytest.approx(-5e-4)
        with pytest.raises(SingularDetuningError):
            md.dispersive_shift(md.SystemParams(g=1e-3, Delta_R=0.0))

    def test_interaction_and_cutoff_times(self):
        assert md.interaction_time(FIG2_DRESSED) == pytest.approx(500.0 * math.pi, rel=1e-12)
        assert md.spectral_cutoff_time(FIG2_DRESSED) == pytest.approx(
            40.0 * math.pi * 0.05 / 25e-6, rel=1e-12
        )


class TestHamiltonians:
    def test_bare_decoupled_spectrum(self):
        p = md.SystemParams(omega_q=1.05, g=0.0)
        h = md.bare_hamiltonian(p, 4)
        expect = sorted(s * 1.05 / 2 + n for s in (1, -1) for n in range(4))
        np.testing.assert_allclose(np.linalg.eigvalsh(h.data), expect, atol=1e-12)

    def test_bare_hand_assembly(self):
        # 2 (x) 2 truncation with every parameter 1, assembled manually.
        p = md.SystemParams(omega_q=1.0, g=1.0)
        got = md.bare_hamiltonian(p, 2).data
        sz, sx, eye2 = hs.sigma_z().data, hs.sigma_x().data, np.eye(2)
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        expect = (
            0.5 * np.kron(sz, eye2)
            + np.kron(eye2, a.conj().T @ a)
            + np.kron(sx, a + a.conj().T)
        )
        np.testing.assert_allclose(got, expect, atol=1e-15)

    def test_dressed_decoupled_doublet(self):
        p = md.SystemParams(Delta_R=0.05, g=0.0)
        h = md.dressed_hamiltonian(p, 3)
        evals = np.linalg.eigvalsh(h.data)
        expect = sorted(s * 1.05 / 2 + n for s in (1, -1) for n in range(3))
        np.testing.assert_allclose(evals, expect, atol=1e-12)

    def test_dressed_qubit_splitting_with_detuning(self):
        # Closed-form 2x2 eigenvalues: splitting sqrt(Omega_R^2 + Delta^2).
        p = md.SystemParams(Delta_R=0.05, Delta=0.02, g=0.0)
        h = md.dressed_hamiltonian(p, 2)
        gap = math.sqrt(1.05 ** 2 + 0.02 ** 2)
        expect = sorted(s * gap / 2 + n for s in (1, -1) for n in range(2))
        np.testing.assert_allclose(np.linalg.eigvalsh(h.data), expect, atol=1e-12)

    def test_dressed_uses_instantaneous_amplitude(self):
        h0 = md.dressed_hamiltonian(FIG2_DRESSED, 3, Omega_R_now=0.0)
        sx = hs.embed(hs.sigma_x(), 0, h0.layout).data
        assert abs(np.trace(sx @ h0.data)) <= 1e-14

    def test_two_qubit_decoupled_tensor_sum(self):
        p = md.SystemParams(Delta_R=0.05, g=0.0)
        h = md.two_qubit_hamiltonian(p, 3)
        single = np.linalg.eigvalsh(0.5 * 1.05 * hs.sigma_x().data)
        expect = sorted(
            a + b + n for a in single for b in single for n in range(3)
        )
        np.testing.assert_allclose(np.linalg.eigvalsh(h.data), expect, atol=1e-12)

    def test_two_qubit_hand_assembly(self):
        # Small 16x16 instance assembled with explicit kron chains.
        p = md.SystemParams(Delta_R=0.05, Delta=0.01, g=5e-3)
        got = md.two_qubit_hamiltonian(p, 4).data
        sz, sx, eye2 = hs.sigma_z().data, hs.sigma_x().data, np.eye(2)
        a = np.diag(np.sqrt([1.0, 2.0, 3.0]), k=1).astype(complex)
        eye_h = np.eye(4)
        x = a + a.conj().T
        expect = np.kron(np.kron(eye2, eye2), a.conj().T @ a)
        for slot in (0, 1):
            szj = np.kron(sz, eye2) if slot == 0 else np.kron(eye2, sz)
            sxj = np.kron(sx, eye2) if slot == 0 else np.kron(eye2, sx)
            expect = expect + np.kron(-0.005 * szj + 0.525 * sxj, eye_h)
            expect = expect - 5e-3 * np.kron(szj, x)
        np.testing.assert_allclose(got, expect, atol=1e-15)

    def test_two_qubit_amplitude_override(self):
        p = md.SystemParams(Delta_R=0.05, g=5e-3)
        static = md.two_qubit_hamiltonian(p, 3, amplitudes=(0.0, 0.0))
        sx1 = hs.embed(hs.sigma_x(), 0, static.layout).data
        assert abs(np.trace(sx1 @ static.data)) <= 1e-14

    def test_all_constructors_hermitian(self):
        p = FIG2_DRESSED
        for op in (
            md.bare_hamiltonian(p, 5),
            md.dressed_hamiltonian(p, 5),
            md.two_qubit_hamiltonian(p, 4),
            md.rwa_hamiltonian(p, 5),
            md.effective_hamiltonian(p, 4),
        ):
            assert np.max(np.abs(op.data - op.data.conj().T)) <= 1e-12


class TestRwaHamiltonian:
    def test_conserves_excitation_number(self):
        h = md.rwa_hamiltonian(FIG2_DRESSED, 6)
        lay = h.layout
        n_exc = (
            0.5 * hs.embed(hs.sigma_z(), 0, lay).data
            + hs.embed(hs.number(6), 1, lay).data
        )
        comm = h.data @ n_exc - n_exc @ h.data
        assert np.max(np.abs(comm)) <= 1e-12

    def test_single_excitation_block_splitting(self):
        # Jaynes-Cummings doublet |1,0>, |0,1>: gap sqrt(Delta_R^2 + 4 g^2).
        p = FIG2_DRESSED
        h = md.rwa_hamiltonian(p, 2)
        idx = [0 * 2 + 0, 1 * 2 + 1]  # |e,0> and |g,1> in the (qubit, osc) basis
        block = h.data[np.ix_(idx, idx)]
        gap = np.diff(np.linalg.eigvalsh(block))[0]
        assert gap == pytest.approx(math.sqrt(0.05 ** 2 + 4 * (5e-3) ** 2), rel=1e-12)

    def test_g_zero_diagonal(self):
        h = md.rwa_hamiltonian(FIG2_DRESSED.replace(g=0.0), 4)
        assert np.max(np.abs(h.data - np.diag(np.diag(h.data)))) == 0.0

    def test_unitary_equivalence_to_dressed(self):
        # Rotating the driven frame by U leaves exactly the counter-rotating
        # remainder g (sigma_+ a^dag + sigma_- a): an operator identity.
        p = FIG2_DRESSED
        n = 5
        u1 = md.dressed_frame_rotation()
        u = np.kron(u1, np.eye(n))
        lhs = u @ md.dressed_hamiltonian(p, n).data @ u.conj().T
        lay = hs.SubsystemLayout([2, n])
        sp_ = hs.embed(hs.sigma_plus(), 0, lay).data
        sm = hs.embed(hs.sigma_minus(), 0, lay).data
        a = hs.embed(hs.destroy(n), 1, lay).data
        counter = p.g * (sp_ @ a.conj().T + sm @ a)
        rhs = md.rwa_hamiltonian(p, n).data + counter
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)


class TestEffectiveHamiltonian:
    def test_exchange_coefficient(self):
        # Equal qubits: the |10> <-> |01> matrix element is g^2/Delta_R.
        h = md.effective_hamiltonian(FIG2_DRESSED, 3)
        n = 3
        idx_10 = (0 * 2 + 1) * n + 0  # |e g, 0>
        idx_01 = (1 * 2 + 0) * n + 0  # |g e, 0>
        assert h.data[idx_10, idx_01] == pytest.approx(5e-4, rel=1e-12)

    def test_g_zero_reduces_to_free(self):
        p = FIG2_DRESSED.replace(g=0.0)
        h = md.effective_hamiltonian(p, 3)
        lay = h.layout
        free = (
            0.5 * 1.05 * (hs.embed(hs.sigma_z(), 0, lay).data + hs.embed(hs.sigma_z(), 1, lay).data)
            + hs.embed(hs.number(3), 2, lay).data
        )
        np.testing.assert_allclose(h.data, free, atol=1e-15)

    def test_single_qubit_reduction_oscillator_shift(self):
        # With qubit 2 decoupled, the oscillator frequency is pulled by
        # +- g^2/Delta_R depending on the first qubit's state.
        p = FIG2_DRESSED.replace(g_2=0.0)
        h = md.effective_hamiltonian(p, 3)
        n = 3
        up0 = (0 * 2 + 0) * n + 0
        up1 = (0 * 2 + 0) * n + 1
        dn0 = (1 * 2 + 0) * n + 0
        dn1 = (1 * 2 + 0) * n + 1
        chi = 5e-4
        assert (h.data[up1, up1] - h.data[up0, up0]).real == pytest.approx(1.0 + chi, rel=1e-12)
        assert (h.data[dn1, dn1] - h.data[dn0, dn0]).real == pytest.approx(1.0 - chi, rel=1e-12)

    def test_regime_warning(self):
        with pytest.warns(UserWarning):
            md.effective_hamiltonian(md.SystemParams(g=0.02, Delta_R=0.05), 3)


class TestLindbladSet:
    def test_thermal_rates_arithmetic(self):
        p = md.SystemParams(Delta_R=0.05, g=5e-3, gamma_q=1e-4, gamma_h=1e-4, n_th_h=2.0)
        ls = md.lindblad_set(p, 3, n_qubits=1, dressed=True)
        by_label = dict(zip(ls.labels, ls.operators))
        assert set(by_label) == {"qubit1_down", "osc_down", "osc_up"}
        lay = hs.SubsystemLayout([2, 3])
        a = hs.embed(hs.destroy(3), 1, lay).data
        np.testing.assert_allclose(
            by_label["osc_down"].data, math.sqrt(3e-4) * a, atol=1e-15
        )
        np.testing.assert_allclose(
            by_label["osc_up"].data, math.sqrt(2e-4) * a.conj().T, atol=1e-15
        )
        np.testing.assert_allclose(
            by_label["qubit1_down"].data,
            math.sqrt(1e-4) * hs.embed(hs.sigma_minus(), 0, lay).data,
            atol=1e-15,
        )

    def test_no_raising_operators_at_zero_temperature(self):
        ls = md.lindblad_set(FIG2_DRESSED, 3)
        assert all("up" not in lbl for lbl in ls.labels)

    def test_dressed_forces_qubit_occupation_zero(self):
        p = FIG2_DRESSED.replace(n_th_q=3.0)
        ls = md.lindblad_set(p, 3, dressed=True)
        assert "qubit1_up" not in ls.labels
        ls_bare = md.lindblad_set(p, 3, dressed=False)
        assert "qubit1_up" in ls_bare.labels

    def test_two_qubit_count(self):
        p = md.SystemParams(Delta_R=0.05, g=5e-3, gamma_q=1e-6, gamma_h=1e-6, n_th_h=2.0)
        ls = md.lindblad_set(p, 3, n_qubits=2)
        assert len(ls) == 4  # two qubit-down channels + osc down/up


class TestPulse:
    def test_rectangular_branch(self):
        pulse = md.Pulse(Omega_R0=1.05, t0=0.0, t_int=100.0)
        assert md.pulse_amplitude(pulse, 50.0) == pytest.approx(1.05)
        assert md.pulse_amplitude(pulse, -1e-9) == 0.0
        assert md.pulse_amplitude(pulse, 100.0 + 1e-9) == 0.0

    def test_plateau_saturation(self):
        pulse = md.Pulse(Omega_R0=1.05, t0=1.0, t_int=1000.0)
        assert md.pulse_amplitude(pulse, 500.0) == pytest.approx(1.05, abs=1e-12)

    def test_half_amplitude_at_edge(self):
        pulse = md.Pulse(Omega_R0=1.05, t0=1.0, t_int=1000.0)
        assert md.pulse_amplitude(pulse, 0.0) == pytest.approx(1.05 / 2, abs=1e-12)

    def test_exact_edge_symmetry(self):
        pulse = md.Pulse(Omega_R0=1.0, t0=7.0, t_int=300.0)
        ts = np.linspace(-20.0, 320.0, 997)
        np.testing.assert_allclose(
            md.pulse_amplitude(pulse, ts),
            md.pulse_amplitude(pulse, pulse.t_int - ts),
            atol=1e-14,
        )

    def test_monotone_rise(self):
        pulse = md.Pulse(Omega_R0=1.0, t0=10.0, t_int=1000.0)
        ts = np.linspace(-30.0, 30.0, 301)
        vals = md.pulse_amplitude(pulse, ts)
        assert np.all(np.diff(vals) > 0)

    @given(st.floats(-50.0, 350.0), st.floats(0.0, 20.0))
    def test_bounds(self, t, t0):
        pulse = md.Pulse(Omega_R0=1.05, t0=t0, t_int=300.0)
        val = md.pulse_amplitude(pulse, t)
        assert 0.0 <= val <= 1.05 + 1e-12

    def test_invalid_pulse(self):
        with pytest.raises(ValueError):
            md.Pulse(Omega_R0=1.0, t0=-1.0, t_int=10.0)


class TestModel:
    def test_drive_requires_pair(self):
        h = md.dressed_hamiltonian(FIG2_DRESSED, 3)
        ls = md.lindblad_set(FIG2_DRESSED, 3)
        with pytest.raises(ValueError):
            md.Model(h, ls, h1=h)

    def test_gate_model_pulse_matches_static(self):
        p = FIG2_DRESSED
        pulse = md.Pulse(Omega_R0=p.Omega_R, t0=5.0, t_int=100.0)
        m = md.gate_model(p, 3, pulse=pulse)
        h_mid = m.hamiltonian(50.0)
        np.testing.assert_allclose(
            h_mid, md.two_qubit_hamiltonian(p, 3).data, atol=1e-10
        )
