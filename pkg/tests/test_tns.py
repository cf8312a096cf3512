import math

import numpy as np
import pytest

from chaintensor import models, oracle, tns
from chaintensor.spectral import ChainHamiltonian


def random_chain(n, rng):
    # mild parameters keep occupations low so d = 3 suffices
    return ChainHamiltonian(
        eta0=float(rng.uniform(0.15, 0.35)),
        omega=rng.uniform(0.15, 0.35, n),
        hop=rng.uniform(0.15, 0.35, max(n - 1, 0)),
    )


def dense_reference(params, chain, d, rho_sys, dt, steps):
    h, dims = oracle.dense_chain_hamiltonian(
        params.hamiltonian(), params.coupling_op, chain, d
    )
    vac = np.zeros(d**len(chain), dtype=complex)
    vac[0] = 1.0
    rho0 = np.kron(np.asarray(rho_sys, dtype=complex), np.outer(vac, vac.conj()))
    return oracle.dense_evolve(h, dims, rho0, dt, steps)


class TestEvolutionConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            tns.EvolutionConfig(n_chain=0, d=3, d_sys=2, chi=8, dt=0.1)
        with pytest.raises(ValueError):
            tns.EvolutionConfig(n_chain=2, d=3, d_sys=2, chi=8, dt=-0.1)
        with pytest.raises(ValueError):
            tns.EvolutionConfig(n_chain=2, d=3, d_sys=2, chi=8, dt=0.1, e0=1.5)
        with pytest.raises(ValueError):
            tns.EvolutionConfig(n_chain=2, d=3, d_sys=2, chi=8, dt=0.1, trotter_order=4)


class TestChainState:
    def test_product_norm(self):
        state = tns.ChainState.product([np.array([1.0, 0.0]), np.array([0.6, 0.8])])
        assert state.norm() == pytest.approx(1.0)
        assert state.bond_dims() == [1]

    def test_center_moves_preserve_state(self):
        rng = np.random.default_rng(7)
        vecs = [rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(4)]
        # unit-norm site vectors keep the product state canonical everywhere
        vecs = [v / np.linalg.norm(v) for v in vecs]
        state = tns.ChainState.product(vecs)
        rho0 = state.site_density_matrix(2).copy()
        state.move_center(3)
        state.move_center(0)
        assert np.allclose(state.site_density_matrix(2), rho0, atol=1e-13)

    def test_identity_gate_is_noop(self):
        state = tns.ChainState.product([np.array([0.6, 0.8]), np.array([0.0, 1.0])])
        gate = np.eye(4).reshape(2, 2, 2, 2)
        w, kept, clipped = state.apply_bond_gate(0, gate, chi=8, e0=1e-12)
        assert w == pytest.approx(0.0, abs=1e-15)
        assert kept == 1  # product state stays rank one

    def test_chi_cap_truncates(self):
        rng = np.random.default_rng(3)
        state = tns.ChainState.product([rng.normal(size=3) for _ in range(2)])
        # entangle with a random unitary, then cap at bond 1
        h = rng.normal(size=(9, 9))
        h = h + h.T
        w_, v = np.linalg.eigh(h)
        gate = (v @ np.diag(np.exp(-1j * w_)) @ v.conj().T).reshape(3, 3, 3, 3)
        state.apply_bond_gate(0, gate, chi=8, e0=0.0)
        w, kept, _ = state.apply_bond_gate(0, np.eye(9).reshape(3, 3, 3, 3), chi=1, e0=0.0)
        assert kept == 1
        assert 0.0 < w < 1.0

    def test_floor_clips_small_singular_values(self):
        rng = np.random.default_rng(5)
        state = tns.ChainState.product([rng.normal(size=3) for _ in range(2)])
        h = rng.normal(size=(9, 9)) * 0.01
        h = h + h.T
        w_, v = np.linalg.eigh(h)
        gate = (v @ np.diag(np.exp(-1j * w_)) @ v.conj().T).reshape(3, 3, 3, 3)
        state.apply_bond_gate(0, gate, chi=8, e0=0.0)
        # a large floor keeps only the dominant value
        _, kept, clipped = state.apply_bond_gate(
            0, np.eye(9).reshape(3, 3, 3, 3), chi=8, e0=0.5
        )
        assert kept == 1
        assert clipped >= 1


class TestPurification:
    def test_pure_state_rank_one(self):
        v = np.array([0.6, 0.8j])
        rho = np.outer(v, v.conj())
        mat = tns.purify_density_matrix(rho)
        assert mat.shape == (2, 1)
        assert np.allclose(mat @ mat.conj().T, rho, atol=1e-13)

    def test_mixed_state_reconstructs(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        mat = tns.purify_density_matrix(rho)
        assert np.allclose(mat @ mat.conj().T, rho, atol=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            tns.purify_density_matrix(np.array([[0.5, 1.0], [0.0, 0.5]]))
        with pytest.raises(ValueError):
            tns.purify_density_matrix(np.diag([0.9, 0.3]))


class TestAgainstDenseReference:
    def test_pure_initial_state_matches_exact(self):
        rng = np.random.default_rng(42)
        chain = random_chain(3, rng)
        params = models.SpinBosonParams()
        cfg = tns.EvolutionConfig(n_chain=3, d=3, d_sys=2, chi=64, dt=0.02, e0=0.0)
        state = models.monomer_initial_state(cfg, models.EXCITED_PROJECTOR, chain)
        lattice = models.spin_boson_lattice(params, chain, cfg.d)
        traj, report = tns.evolve(state, lattice, cfg, 100)
        ref = dense_reference(params, chain, cfg.d, models.EXCITED_PROJECTOR, cfg.dt, 100)
        err = max(models.trace_distance(a, b) for a, b in zip(traj.rhos, ref))
        assert err < 1e-6
        assert report.hermitization_max < 1e-10

    def test_mixed_initial_state_matches_exact(self):
        rng = np.random.default_rng(1)
        chain = random_chain(2, rng)
        params = models.SpinBosonParams()
        rho0 = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]], dtype=complex)
        cfg = tns.EvolutionConfig(n_chain=2, d=3, d_sys=2, chi=64, dt=0.02, e0=0.0)
        state = models.monomer_initial_state(cfg, rho0, chain)
        lattice = models.spin_boson_lattice(params, chain, cfg.d)
        traj, _ = tns.evolve(state, lattice, cfg, 80)
        ref = dense_reference(params, chain, cfg.d, rho0, cfg.dt, 80)
        err = max(models.trace_distance(a, b) for a, b in zip(traj.rhos, ref))
        assert err < 1e-6

    def test_trotter_error_is_second_order(self):
        rng = np.random.default_rng(9)
        chain = random_chain(2, rng)
        params = models.SpinBosonParams()
        errs = {}
        for dt in (0.08, 0.04):
            steps = round(1.6 / dt)
            cfg = tns.EvolutionConfig(n_chain=2, d=3, d_sys=2, chi=64, dt=dt, e0=0.0)
            state = models.monomer_initial_state(cfg, models.EXCITED_PROJECTOR, chain)
            lattice = models.spin_boson_lattice(params, chain, cfg.d)
            traj, _ = tns.evolve(state, lattice, cfg, steps)
            ref = dense_reference(
                params, chain, cfg.d, models.EXCITED_PROJECTOR, dt, steps
            )
            errs[dt] = models.trace_distance(traj.rhos[-1], ref[-1])
        ratio = errs[0.08] / errs[0.04]
        assert 3.5 < ratio < 4.5


class TestThermalPreparation:
    def test_single_mode_occupation(self):
        beta = 1.3
        omega = 0.8
        d = 8
        chain = ChainHamiltonian(eta0=0.0, omega=np.array([omega]), hop=np.array([]))
        cfg = tns.EvolutionConfig(n_chain=1, d=d, d_sys=2, chi=16, dt=0.05, beta=beta)
        state = tns.chain_thermal_state(tns.chain_only_lattice(chain, d), cfg)
        occ = state.site_expectation(0, tns.number_operator(d)).real
        levels = np.arange(d)
        p = np.exp(-beta * omega * levels)
        p /= p.sum()
        assert occ == pytest.approx(float(levels @ p), abs=1e-10)

    def test_coupled_chain_matches_dense_gibbs(self):
        rng = np.random.default_rng(21)
        chain = random_chain(3, rng)
        d = 3
        beta = 2.0
        cfg = tns.EvolutionConfig(n_chain=3, d=d, d_sys=2, chi=64, dt=0.05, beta=beta)
        lat = tns.chain_only_lattice(chain, d)
        state = tns.chain_thermal_state(lat, cfg)
        h, _ = oracle.dense_chain_hamiltonian(
            np.zeros((1, 1)), np.zeros((1, 1)), chain, d
        )
        rho = oracle.gibbs_state(h, beta)
        rho6 = rho.reshape(d, d, d, d, d, d)
        marginals = [
            np.einsum("pbcqbc->pq", rho6),
            np.einsum("apcaqc->pq", rho6),
            np.einsum("abpabq->pq", rho6),
        ]
        for site, marg in enumerate(marginals):
            got = state.site_density_matrix(site)
            assert np.linalg.norm(got - marg) < 1e-4

    def test_beta_zero_is_maximally_mixed(self):
        chain = ChainHamiltonian(eta0=0.0, omega=np.array([1.0, 1.0]), hop=np.array([0.3]))
        cfg = tns.EvolutionConfig(n_chain=2, d=4, d_sys=2, chi=16, dt=0.05, beta=0.0)
        state = tns.chain_thermal_state(tns.chain_only_lattice(chain, 4), cfg)
        rho = state.site_density_matrix(0)
        assert np.allclose(rho, np.eye(4) / 4.0, atol=1e-12)


class TestRecurrenceProbe:
    def test_two_site_rabi_rebound(self):
        # equal frequencies: occupation of site 0 is cos^2(hop * t),
        # full rebound at t = pi / hop
        hop = 0.5
        chain = ChainHamiltonian(
            eta0=0.3, omega=np.array([1.0, 1.0]), hop=np.array([hop])
        )
        est = tns.recurrence_probe(chain, horizon=20.0, dt=0.005)
        assert est.recurred
        assert est.time == pytest.approx(math.pi / hop, abs=0.02)

    def test_decoupled_chain_never_recurs(self):
        chain = ChainHamiltonian(eta0=0.0, omega=np.array([1.0]), hop=np.array([]))
        est = tns.recurrence_probe(chain, horizon=5.0)
        assert not est.recurred
        assert est.time == 5.0

    def test_longer_chain_recurs_later(self):
        def uniform(n):
            return ChainHamiltonian(
                eta0=0.3, omega=np.ones(n), hop=0.5 * np.ones(n - 1)
            )

        t_short = tns.recurrence_probe(uniform(5), horizon=200.0).time
        t_long = tns.recurrence_probe(uniform(15), horizon=200.0).time
        assert t_long > t_short


class TestReports:
    def test_report_round_trips_to_dict(self):
        rep = tns.TruncationReport()
        rep.merge_bond(1e-9, 12, 2)
        d = rep.to_dict()
        assert d["max_bond_dim"] == 12
        assert d["clipped_at_floor"] == 2
        assert d["warnings"] == []

    def test_leak_warning_on_tiny_fock_space(self):
        # d = 2 with a strongly driven oscillator saturates the top level
        chain = ChainHamiltonian(eta0=1.5, omega=np.array([0.2]), hop=np.array([]))
        params = models.SpinBosonParams()
        cfg = tns.EvolutionConfig(n_chain=1, d=2, d_sys=2, chi=8, dt=0.05)
        state = models.monomer_initial_state(cfg, models.EXCITED_PROJECTOR, chain)
        lattice = models.spin_boson_lattice(params, chain, cfg.d)
        _, report = tns.evolve(state, lattice, cfg, 40, leak_check_every=5)
        assert report.leakage_max > 1e-6
        assert any("top-level" in w for w in report.warnings)
