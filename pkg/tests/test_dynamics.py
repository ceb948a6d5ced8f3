import math

import numpy as np
import pytest

from conftest import random_density_matrix
from qubus import dynamics as dy
from qubus import hilbert as hs
from qubus import models as md
from qubus.errors import (
    IntegrationError,
    NonUniqueSteadyStateError,
    NumericalError,
    RegimeWarning,
)


FIG2 = md.SystemParams(g=5e-3, Delta_R=0.05, gamma_q=1e-4, gamma_h=1e-4)


def _direct_rhs(h, lindblads, rho):
    out = -1j * (h @ rho - rho @ h)
    for lm in lindblads:
        out += lm @ rho @ lm.conj().T - 0.5 * (
            lm.conj().T @ lm @ rho + rho @ lm.conj().T @ lm
        )
    return out


class TestLiouvillian:
    def test_action_matches_direct_evaluation(self, rng):
        h = md.dressed_hamiltonian(FIG2, 3)
        ls = md.lindblad_set(FIG2, 3)
        liou = dy.liouvillian(h, ls)
        rho = random_density_matrix(rng, 6)
        got = dy._unvec(liou.matrix @ dy._vec(rho), 6)
        expect = _direct_rhs(h.data, ls.matrices(), rho)
        assert np.max(np.abs(got - expect)) <= 1e-12

    def test_single_decay_channel_hand_value(self):
        # H = 0, L = sqrt(gamma) a on |1><1|: gamma (|0><0| - |1><1|).
        gamma = 0.3
        n = 2
        lay = hs.SubsystemLayout([n])
        h = hs.Operator(lay, np.zeros((n, n)))
        ls = md.LindbladSet((math.sqrt(gamma) * hs.destroy(n),))
        liou = dy.liouvillian(h, ls)
        rho1 = np.diag([0.0, 1.0]).astype(complex)
        got = dy._unvec(liou.matrix @ dy._vec(rho1), n)
        np.testing.assert_allclose(got, gamma * np.diag([1.0, -1.0]), atol=1e-15)

    def test_pure_commutator_antihermitian_spectrum(self):
        h = md.dressed_hamiltonian(FIG2, 3)
        liou = dy.liouvillian(h, md.LindbladSet(()))
        evals = np.linalg.eigvals(liou.matrix)
        assert np.max(np.abs(evals.real)) <= 1e-10

    def test_trace_functional_left_null_vector(self):
        h = md.dressed_hamiltonian(FIG2, 4)
        ls = md.lindblad_set(FIG2, 4)
        liou = dy.liouvillian(h, ls)
        d = 8
        trace_row = np.zeros(d * d, dtype=complex)
        trace_row[np.arange(d) * d + np.arange(d)] = 1.0
        assert np.max(np.abs(trace_row @ liou.matrix)) <= 1e-10

    def test_real_representation_exact(self, rng):
        # The Hermitian-basis real form acts identically to the complex one.
        h = md.dressed_hamiltonian(FIG2, 3)
        ls = md.lindblad_set(FIG2, 3)
        liou = dy.liouvillian(h, ls)
        prop = dy.EigPropagator(liou)
        rho = random_density_matrix(rng, 6)
        r = prop.coords(rho)
        np.testing.assert_allclose(prop.uncoords(r), rho, atol=1e-13)
        rhs_complex = dy._unvec(liou.matrix @ dy._vec(rho), 6)
        t_map = dy._hermitian_basis_map(6)
        gen = np.asarray(t_map @ liou.matrix @ t_map.conj().T.tocsc()).real
        np.testing.assert_allclose(prop.uncoords(gen @ r), rhs_complex, atol=1e-12)


class TestEvolve:
    def test_unitary_purity_conserved(self):
        p = FIG2.replace(gamma_q=0.0, gamma_h=0.0)
        model = md.Model(md.dressed_hamiltonian(p, 4), md.lindblad_set(p, 4))
        lay = model.layout
        rho0 = hs.ket_to_dm(hs.basis_ket(lay, 0), lay)
        traj = dy.evolve(rho0, model, np.linspace(0, 40, 11), store_states=True)
        purities = [float(np.trace(s @ s).real) for s in traj.states]
        assert np.max(np.abs(np.array(purities) - 1.0)) <= 1e-8

    def test_damped_oscillator_decay(self):
        # <n>(t) = e^{-gamma t} from one quantum, zero-temperature bath.
        gamma = 1e-2
        p = md.SystemParams(g=0.0, Delta_R=0.0, gamma_q=0.0, gamma_h=gamma)
        model = md.Model(
            md.dressed_hamiltonian(p, 5, Omega_R_now=0.0), md.lindblad_set(p, 5)
        )
        lay = model.layout
        mat = np.zeros((10, 10), dtype=complex)
        mat[1, 1] = 1.0  # qubit up (x) |n=1>
        rho0 = hs.DensityMatrix(hs.Operator(lay, mat))
        times = np.linspace(0, 200, 21)
        obs = {"n": hs.embed(hs.number(5), 1, lay)}
        traj = dy.evolve(rho0, model, times, observables=obs)
        np.testing.assert_allclose(traj.records["n"], np.exp(-gamma * times), atol=1e-10)

    def test_methods_agree(self):
        model = md.Model(md.dressed_hamiltonian(FIG2, 3), md.lindblad_set(FIG2, 3))
        lay = model.layout
        rho0 = hs.ket_to_dm((hs.basis_ket(lay, 0) + hs.basis_ket(lay, 1)) / math.sqrt(2), lay)
        times = np.linspace(0, 30, 16)
        obs = dy.standard_observables(lay, 1)
        t_eig = dy.evolve(rho0, model, times, method="expm-eig", observables=obs)
        t_rk4 = dy.evolve(rho0, model, times, method="rk4", observables=obs, max_step=0.02)
        for name in obs:
            assert np.max(np.abs(t_eig.records[name] - t_rk4.records[name])) <= 1e-6

    def test_energy_conserved_without_damping(self):
        p = FIG2.replace(gamma_q=0.0, gamma_h=0.0)
        h = md.dressed_hamiltonian(p, 4)
        model = md.Model(h, md.lindblad_set(p, 4))
        lay = model.layout
        rho0 = hs.ket_to_dm(hs.basis_ket(lay, 1), lay)
        traj = dy.evolve(
            rho0, model, np.linspace(0, 50, 11), observables={"H": h}
        )
        drift = np.max(np.abs(traj.records["H"] - traj.records["H"][0]))
        assert drift <= 1e-8

    def test_trace_and_positivity_records(self):
        model = md.Model(md.dressed_hamiltonian(FIG2, 3), md.lindblad_set(FIG2, 3))
        lay = model.layout
        rho0 = hs.ket_to_dm(hs.basis_ket(lay, 0), lay)
        traj = dy.evolve(rho0, model, np.linspace(0, 20, 5))
        assert np.max(np.abs(traj.records["trace"] - 1.0)) <= 1e-6
        assert np.max(traj.records["herm_deviation"]) <= 1e-8
        assert np.min(traj.records["min_eigenvalue"]) >= -1e-6

    def test_bad_grid_rejected(self):
        model = md.Model(md.dressed_hamiltonian(FIG2, 3), md.lindblad_set(FIG2, 3))
        lay = model.layout
        rho0 = hs.ket_to_dm(hs.basis_ket(lay, 0), lay)
        with pytest.raises(ValueError):
            dy.evolve(rho0, model, np.array([0.0, 2.0, 1.0]))

    def test_time_dependent_requires_rk4(self):
        pulse = md.Pulse(Omega_R0=FIG2.Omega_R, t0=1.0, t_int=50.0)
        model = md.gate_model(FIG2, 3, pulse=pulse)
        lay = model.layout
        rho0 = hs.ket_to_dm(hs.basis_ket(lay, 0), lay)
        with pytest.raises(ValueError):
            dy.evolve(rho0, model, np.linspace(0, 10, 3), method="expm-eig")

    def test_coarse_stepping_flagged(self):
        # Deliberately coarse fixed steps must trip the quality gate (or the
        # non-finite guard once unstable) rather than silently return
        # drifted states.
        p = FIG2.replace(gamma_q=0.0, gamma_h=0.0)
        model = md.Model(md.dressed_hamiltonian(p, 6), md.lindblad_set(p, 6))
        lay = model.layout
        rho0 = hs.ket_to_dm(hs.basis_ket(lay, 0), lay)
        with pytest.raises((IntegrationError, NumericalError)):
            dy.evolve(rho0, model, np.linspace(0, 400, 3), method="rk4", max_step=0.52)


class TestSteadyState:
    def test_bare_qubit_ground_state(self):
        p = md.SystemParams(omega_q=1.05, g=5e-3, gamma_q=1e-4, gamma_h=1e-4)
        model = md.Model(md.bare_hamiltonian(p, 6), md.lindblad_set(p, 6, dressed=False))
        ss = dy.steady_state(model)
        sz = ss.expectation(hs.embed(hs.sigma_z(), 0, ss.layout))
        assert sz == pytest.approx(-1.0, abs=1e-3)

    def test_dressed_decoupled_maximally_mixed(self):
        p = md.SystemParams(Delta_R=0.05, g=0.0, gamma_q=1e-6, gamma_h=1e-4)
        model = md.Model(md.dressed_hamiltonian(p, 4), md.lindblad_set(p, 4))
        ss = dy.steady_state(model)
        qubit = hs.partial_trace(ss, [0])
        assert np.max(np.abs(qubit.data - np.eye(2) / 2)) <= 1e-6

    def test_zero_damping_rejected(self):
        p = FIG2.replace(gamma_q=0.0, gamma_h=0.0)
        model = md.Model(md.dressed_hamiltonian(p, 3), md.lindblad_set(p, 3))
        with pytest.raises(NonUniqueSteadyStateError):
            dy.steady_state(model)

    def test_residual_bound(self):
        model = md.Model(md.dressed_hamiltonian(FIG2, 8), md.lindblad_set(FIG2, 8))
        ss = dy.steady_state(model)
        liou = dy.liouvillian(model.h0, model.lindblads)
        resid = np.linalg.norm(liou.matrix @ dy._vec(ss.data))
        assert resid <= 1e-10

    def test_closed_form_values(self):
        vals = dy.steady_state_closed_form(FIG2)
        assert vals["gamma_tilde"] == pytest.approx(16e-4 / 9.0, rel=1e-12)
        assert vals["rho_13"] == pytest.approx(0.05, rel=1e-12)
        assert vals["sigma_z_expectation"] == pytest.approx(-45.0 / 8.0 * 0.01, rel=1e-12)
        assert vals["rho_11"] + vals["rho_22"] + vals["rho_33"] == pytest.approx(1.0)

    def test_closed_form_g_zero(self):
        vals = dy.steady_state_closed_form(FIG2.replace(g=0.0))
        assert vals["rho_11"] == vals["rho_22"] == 0.5
        assert vals["sigma_z_expectation"] == 0.0

    def test_closed_form_regime_warning(self):
        with pytest.warns(RegimeWarning):
            dy.steady_state_closed_form(md.SystemParams(g=0.02, Delta_R=0.05,
                                                        gamma_q=1e-4, gamma_h=1e-4))

    def test_restricted_model_matches_closed_form(self):
        # Exact steady state of the three-level ladder the closed form is
        # derived in; agreement is O((g/Delta_R)^3) in absolute terms.
        g, d_r, omega = 5e-3, 0.05, 1.0
        big_omega = omega + d_r
        gamma = 1e-5
        h3 = np.array(
            [[big_omega / 2, 0, g], [0, -big_omega / 2, 0], [g, 0, -big_omega / 2 + omega]],
            dtype=complex,
        )
        # Qubit jump rotated into the number-conserving frame and restricted.
        lq = np.array([[0.5, -0.5, 0.0], [0.5, -0.5, 0.0], [0.0, 0.0, -0.5]], dtype=complex)
        la = np.zeros((3, 3), dtype=complex)
        la[1, 2] = 1.0
        lay = hs.SubsystemLayout([3])
        ls = md.LindbladSet(
            (math.sqrt(gamma) * hs.Operator(lay, lq), math.sqrt(gamma) * hs.Operator(lay, la))
        )
        model = md.Model(hs.Operator(lay, h3), ls)
        ss = dy.steady_state(model).data
        closed = dy.steady_state_closed_form(
            md.SystemParams(g=g, Delta_R=d_r, gamma_q=gamma, gamma_h=gamma)
        )
        tol = 6e-3  # ~5 (g/Delta_R)^3
        assert abs(ss[0, 0].real - closed["rho_11"]) <= tol
        assert abs(ss[1, 1].real - closed["rho_22"]) <= tol
        assert abs(ss[2, 2].real - closed["rho_33"]) <= tol
        assert abs(ss[0, 2].real - closed["rho_13"]) <= tol
        sz = (ss[0, 0] - ss[1, 1] - ss[2, 2]).real
        assert abs(sz - closed["sigma_z_expectation"]) <= tol


class TestRegressionCorrelator:
    def test_decoupled_damped_oscillator(self):
        gamma = 1e-2
        p = md.SystemParams(g=0.0, Delta_R=0.05, gamma_q=0.0, gamma_h=gamma)
        model = md.Model(md.dressed_hamiltonian(p, 8), md.lindblad_set(p, 8))
        lay = model.layout
        vac = hs.ket_to_dm(hs.basis_ket(lay, 0), lay)
        grid = np.linspace(0.0, 300.0, 3001)
        corr = dy.regression_correlator(model, vac, grid)
        expect = np.cos(grid) * np.exp(-gamma * grid / 2.0)
        assert np.max(np.abs(corr - expect)) <= 1e-10

    def test_initial_value_thermal_variance(self):
        # C(0) = <x^2> = 2 n_th + 1 for a thermal oscillator.
        n_th = 1.0
        p = md.SystemParams(g=0.0, Delta_R=0.05, gamma_q=0.0, gamma_h=1e-3, n_th_h=n_th)
        n = hs.choose_fock_truncation(n_th)
        model = md.Model(md.dressed_hamiltonian(p, n), md.lindblad_set(p, n))
        temp = 1.0 / math.log(1.0 / n_th + 1.0)
        rho_osc = hs.thermal_state(1.0, temp, n)
        rho_q = np.diag([1.0, 0.0]).astype(complex)
        rho0 = hs.DensityMatrix(hs.Operator(model.layout, np.kron(rho_q, rho_osc.data)))
        grid = np.linspace(0.0, 1.0, 8)
        corr = dy.regression_correlator(model, rho0, grid)
        assert corr[0] == pytest.approx(2.0 * n_th + 1.0, rel=1e-6)

    def test_heisenberg_oracle_unitary_case(self, rng):
        # gamma = 0: regression result equals the symmetrized Heisenberg
        # correlator Tr[(x(t) x + x x(t)) rho]/2 from direct exponentials.
        p = md.SystemParams(g=8e-3, Delta_R=0.1, gamma_q=0.0, gamma_h=0.0)
        n = 4
        model = md.Model(md.dressed_hamiltonian(p, n), md.lindblad_set(p, n))
        lay = model.layout
        rho = random_density_matrix(rng, 2 * n)
        rho0 = hs.DensityMatrix(hs.Operator(lay, rho))
        grid = np.linspace(0.0, 25.0, 41)
        corr = dy.regression_correlator(model, rho0, grid)
        hmat = model.h0.data
        evals, evecs = np.linalg.eigh(hmat)
        x = dy.quadrature_operator(lay).data
        oracle = np.empty_like(grid)
        for i, t in enumerate(grid):
            u = (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T
            xt = u.conj().T @ x @ u
            oracle[i] = 0.5 * np.trace((xt @ x + x @ xt) @ rho).real
        assert np.max(np.abs(corr - oracle)) <= 1e-8

    def test_rk4_route_matches_eig(self):
        model = md.Model(md.dressed_hamiltonian(FIG2, 3), md.lindblad_set(FIG2, 3))
        lay = model.layout
        rho0 = hs.ket_to_dm(hs.basis_ket(lay, 0), lay)
        grid = np.linspace(0.0, 20.0, 41)
        c_eig = dy.regression_correlator(model, rho0, grid, method="expm-eig")
        c_rk4 = dy.regression_correlator(model, rho0, grid, method="rk4", max_step=0.02)
        assert np.max(np.abs(c_eig - c_rk4)) <= 1e-6

    def test_steady_state_mode(self):
        model = md.Model(md.dressed_hamiltonian(FIG2, 4), md.lindblad_set(FIG2, 4))
        grid = np.linspace(0.0, 10.0, 11)
        corr = dy.regression_correlator(model, None, grid, initial="steady")
        ss = dy.steady_state(model)
        x = dy.quadrature_operator(model.layout).data
        expect0 = np.trace(x @ x @ ss.data).real
        assert corr[0] == pytest.approx(expect0, rel=1e-8)

    def test_nonuniform_grid_supported_by_direct_mode_sum(self):
        model = md.Model(md.dressed_hamiltonian(FIG2, 3), md.lindblad_set(FIG2, 3))
        lay = model.layout
        rho0 = hs.ket_to_dm(hs.basis_ket(lay, 0), lay)
        grid_u = np.linspace(0.0, 8.0, 9)
        grid_n = np.array([0.0, 1.0, 2.5, 4.0, 8.0])
        c_u = dy.regression_correlator(model, rho0, grid_u)
        c_n = dy.regression_correlator(model, rho0, grid_n)
        assert c_n[0] == pytest.approx(c_u[0], rel=1e-10)
        assert c_n[-1] == pytest.approx(c_u[-1], rel=1e-8)


class TestModeEvaluator:
    def test_uniform_grid_recurrence_matches_direct_exp(self, rng):
        lam = -np.abs(rng.standard_normal(7)) * 1e-3 + 1j * rng.standard_normal(7)
        amp = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        dt, n = 0.37, 503
        got = dy.modes_on_uniform_grid(lam, amp, dt, n, t0=1.3, chunk=64)
        ts = 1.3 + dt * np.arange(n)
        expect = np.array([np.sum(amp * np.exp(lam * t)).real for t in ts])
        np.testing.assert_allclose(got, expect, atol=1e-10)
