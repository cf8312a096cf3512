import numpy as np
import pytest

from chaintensor import models, oracle, ttm
from chaintensor.spectral import ChainHamiltonian


def small_chain():
    return ChainHamiltonian(
        eta0=0.3, omega=np.array([0.8, 1.1]), hop=np.array([0.25])
    )


class TestDenseHamiltonian:
    def test_hermitian(self):
        params = models.SpinBosonParams()
        h, dims = oracle.dense_chain_hamiltonian(
            params.hamiltonian(), params.coupling_op, small_chain(), 3
        )
        assert dims == [2, 3, 3]
        assert np.allclose(h, h.conj().T)

    def test_dimension_cap(self):
        chain = ChainHamiltonian(
            eta0=0.1, omega=np.ones(8), hop=0.1 * np.ones(7)
        )
        with pytest.raises(oracle.DimensionCapError):
            oracle.dense_chain_hamiltonian(np.eye(2), np.eye(2), chain, 4)

    def test_decoupled_chain_energy(self):
        # eta0 = 0 and no hops: spectrum is sums of level energies
        chain = ChainHamiltonian(
            eta0=0.0, omega=np.array([1.0, 2.0]), hop=np.array([1e-30])
        )
        h, _ = oracle.dense_chain_hamiltonian(
            np.zeros((1, 1)), np.zeros((1, 1)), chain, 2
        )
        w = np.sort(np.linalg.eigvalsh(h))
        assert np.allclose(w, [0.0, 1.0, 2.0, 3.0], atol=1e-12)


class TestEvolution:
    def test_integrators_agree(self):
        params = models.SpinBosonParams()
        h, dims = oracle.dense_chain_hamiltonian(
            params.hamiltonian(), params.coupling_op, small_chain(), 3
        )
        dim_env = 9
        vac = np.zeros(dim_env)
        vac[0] = 1.0
        rho0 = np.kron(models.EXCITED_PROJECTOR, np.outer(vac, vac))
        a = oracle.dense_evolve(h, dims, rho0, 0.05, 30, integrator="eigh")
        b = oracle.dense_evolve(h, dims, rho0, 0.05, 30, integrator="expm")
        assert np.max(np.abs(a - b)) < 1e-11

    def test_unknown_integrator(self):
        with pytest.raises(ValueError):
            oracle.dense_evolve(np.eye(2), [2], np.eye(2) / 2, 0.1, 1, integrator="rk4")

    def test_trace_preserved(self):
        params = models.SpinBosonParams()
        h, dims = oracle.dense_chain_hamiltonian(
            params.hamiltonian(), params.coupling_op, small_chain(), 3
        )
        vac = np.zeros(9)
        vac[0] = 1.0
        rho0 = np.kron(np.eye(2) / 2, np.outer(vac, vac))
        out = oracle.dense_evolve(h, dims, rho0, 0.1, 20)
        assert np.allclose([np.trace(r).real for r in out], 1.0, atol=1e-12)


class TestPartialTrace:
    def test_product_state(self):
        rho_s = np.array([[0.7, 0.1], [0.1, 0.3]], dtype=complex)
        rho_e = np.diag([0.5, 0.25, 0.25]).astype(complex)
        full = np.kron(rho_s, rho_e)
        assert np.allclose(oracle.partial_trace_to_system(full, [2, 3]), rho_s)


class TestGibbs:
    def test_limits(self):
        h = np.diag([0.0, 1.0]).astype(complex)
        hot = oracle.gibbs_state(h, 0.0)
        assert np.allclose(hot, np.eye(2) / 2)
        cold = oracle.gibbs_state(h, 200.0)
        assert cold[0, 0].real == pytest.approx(1.0, abs=1e-12)

    def test_boltzmann_ratio(self):
        h = models.SpinBosonParams().hamiltonian()
        beta = 1.7
        rho = oracle.gibbs_state(h, beta)
        w, v = np.linalg.eigh(h)
        p = np.real(np.diag(v.conj().T @ rho @ v))
        assert p[1] / p[0] == pytest.approx(np.exp(-beta * (w[1] - w[0])), rel=1e-10)


class TestLindblad:
    def test_trace_preserving_generator(self):
        h, jumps = self._qubit()
        L = oracle.lindblad_liouvillian(h, jumps)
        tvec = ttm.vec(np.eye(2)).conj()
        assert np.max(np.abs(tvec @ L)) < 1e-13

    def test_pure_decay_steady_state(self):
        lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        L = oracle.lindblad_liouvillian(np.zeros((2, 2)), [(lower, 0.5)])
        w, v = np.linalg.eig(L)
        idx = np.argmin(np.abs(w))
        ss = ttm.unvec(v[:, idx])
        ss /= np.trace(ss)
        assert np.allclose(ss, np.diag([1.0, 0.0]), atol=1e-12)

    def test_thermalizing_jumps_reach_gibbs(self):
        h, jumps = self._qubit(beta=2.0)
        L = oracle.lindblad_liouvillian(h, jumps)
        e = oracle.semigroup_maps(L, 1.0, 200)[-1]
        rho = ttm.unvec(e @ ttm.vec(np.diag([1.0, 0.0]).astype(complex)))
        gibbs = oracle.gibbs_state(h, 2.0)
        assert models.trace_distance(rho, gibbs) < 1e-10

    @staticmethod
    def _qubit(beta=1.0, rate=0.4):
        h = models.SpinBosonParams().hamiltonian()
        return h, oracle.thermalizing_qubit_jumps(h, beta, rate)


class TestSemigroup:
    def test_composition(self):
        h, jumps = TestLindblad._qubit()
        L = oracle.lindblad_liouvillian(h, jumps)
        maps = oracle.semigroup_maps(L, 0.2, 6)
        assert np.allclose(maps[4], maps[1] @ maps[2], atol=1e-12)

    def test_trajectories_stay_physical(self):
        h, jumps = TestLindblad._qubit()
        L = oracle.lindblad_liouvillian(h, jumps)
        preps = ttm.physical_preparations(2)
        trajs = oracle.semigroup_trajectories(L, 0.1, 20, preps)
        for traj in trajs:
            for rho in traj:
                assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
                assert np.linalg.eigvalsh(rho).min() > -1e-12
