"""Physical models and the end-to-end learn-then-propagate pipeline.

The monomer is the spin-boson model: a biased two-level system coupled to
one oscillator chain through the excited-state projector.  The dimer is a
three-level single-excitation system (common ground state, two coupled
excited sites) with an independent chain on each site, arranged as
chain - system - chain in the tensor network.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tns, ttm
from .tns import (
    ChainState,
    EvolutionConfig,
    Lattice,
    Trajectory,
    chain_only_lattice,
    chain_thermal_state,
    creation_operator,
    displacement_coupling,
    number_operator,
    purify_density_matrix,
)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
# basis ordering: index 0 = excited, index 1 = ground
EXCITED_PROJECTOR = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class SpinBosonParams:
    """Bias eps, tunneling delta; couples through the excited-state projector."""

    eps: float = 1.0
    delta: float = 0.6

    def hamiltonian(self):
        return 0.5 * self.eps * SIGMA_Z + 0.5 * self.delta * SIGMA_X

    @property
    def coupling_op(self):
        return EXCITED_PROJECTOR

    @property
    def d_sys(self):
        return 2


@dataclass(frozen=True)
class DimerParams:
    """Single-excitation dimer: |g>, |e1>, |e2> with exchange coupling.

    Basis ordering: index 0 = |g>, 1 = |e1>, 2 = |e2>.  Site i couples to
    its own chain through |e_i><e_i|.
    """

    eps1: float = 1.0
    eps2: float = 2.0
    exchange: float = 0.6
    mu1: float = 1.0
    mu2: float = 1.0

    def hamiltonian(self):
        h = np.zeros((3, 3), dtype=complex)
        h[1, 1] = self.eps1
        h[2, 2] = self.eps2
        h[1, 2] = h[2, 1] = self.exchange
        return h

    def dipole_operator(self):
        mu = np.zeros((3, 3), dtype=complex)
        mu[1, 0] = self.mu1
        mu[2, 0] = self.mu2
        return mu + mu.conj().T

    def site_projector(self, which):
        p = np.zeros((3, 3), dtype=complex)
        p[which, which] = 1.0
        return p

    @property
    def d_sys(self):
        return 3


def spin_boson_lattice(params, chain, d):
    """System site 0 followed by the oscillator chain."""
    num = number_operator(d)
    disp = displacement_coupling(d)
    bdag = creation_operator(d)
    site_terms = [params.hamiltonian()] + [w * num for w in chain.omega]
    bond_terms = [chain.eta0 * np.kron(params.coupling_op, disp)]
    hop2 = np.kron(bdag, bdag.conj().T) + np.kron(bdag.conj().T, bdag)
    bond_terms += [t * hop2 for t in chain.hop]
    return Lattice(
        dims=[params.d_sys] + [d] * len(chain),
        site_terms=site_terms,
        bond_terms=bond_terms,
        system_site=0,
    )


def dimer_lattice(params, chain_left, chain_right, d):
    """chain(site 1) - system - chain(site 2) geometry.

    The left chain is stored mirrored (its site 0 is adjacent to the
    system).
    """
    num = number_operator(d)
    disp = displacement_coupling(d)
    bdag = creation_operator(d)
    hop2 = np.kron(bdag, bdag.conj().T) + np.kron(bdag.conj().T, bdag)
    nl, nr = len(chain_left), len(chain_right)
    site_terms = (
        [w * num for w in chain_left.omega[::-1]]
        + [params.hamiltonian()]
        + [w * num for w in chain_right.omega]
    )
    bond_terms = [t * hop2 for t in chain_left.hop[::-1]]
    bond_terms.append(chain_left.eta0 * np.kron(disp, params.site_projector(1)))
    bond_terms.append(chain_right.eta0 * np.kron(params.site_projector(2), disp))
    bond_terms += [t * hop2 for t in chain_right.hop]
    return Lattice(
        dims=[d] * nl + [params.d_sys] + [d] * nr,
        site_terms=site_terms,
        bond_terms=bond_terms,
        system_site=nl,
    )


def monomer_initial_state(cfg, rho_sys, chain):
    return tns.initial_state(cfg, rho_sys, chain, system_on_left=True)


def dimer_initial_state(cfg, rho_sys, chain_left, chain_right):
    """Purified product chain_L(thermal) x system x chain_R(thermal)."""
    sys_vec = purify_density_matrix(np.asarray(rho_sys, dtype=complex))
    sys_tensor = sys_vec.reshape(1, *sys_vec.shape, 1)
    left = chain_thermal_state(chain_only_lattice(chain_left, cfg.d), cfg)
    right = chain_thermal_state(chain_only_lattice(chain_right, cfg.d), cfg)
    left_tensors = [t.transpose(3, 1, 2, 0) for t in reversed(left.tensors)]
    tensors = left_tensors + [sys_tensor] + right.tensors
    state = ChainState(tensors, center=len(left_tensors))
    state.move_center(0)
    state.scale(1.0 / state.norm())
    return state


@dataclass
class PipelineResult:
    """Learning-stage output: trajectories, maps, tensors and diagnostics."""

    config: EvolutionConfig
    preparations: list
    trajectories: list  # Trajectory per preparation
    maps: ttm.DynamicalMapSet
    tensors: ttm.TransferTensorSet
    cutoff: int
    reports: list
    warnings: list = field(default_factory=list)


def run_pipeline(
    lattice_builder,
    d_sys,
    cfg,
    learn_steps,
    decay_threshold=1e-7,
    leak_check_every=10,
):
    """Run the d_sys^2 basis trajectories, assemble maps, extract tensors.

    `lattice_builder(rho_sys)` must return (initial ChainState, Lattice) for
    a given system preparation.  A warning is recorded when the tensor norms
    have not decayed below threshold by the end of the learning window.
    """
    preps = ttm.physical_preparations(d_sys)
    trajectories = []
    reports = []
    for rho0 in preps:
        state, lattice = lattice_builder(rho0)
        traj, report = tns.evolve(
            state, lattice, cfg, learn_steps, leak_check_every=leak_check_every
        )
        trajectories.append(traj)
        reports.append(report)
    maps = ttm.maps_from_trajectories(
        preps, [t.rhos for t in trajectories], cfg.dt
    )
    tensors = ttm.tensors_from_maps(maps, threshold=decay_threshold)
    warns = [w for r in reports for w in r.warnings]
    if not tensors.decayed:
        msg = (
            "transfer tensors have not decayed below "
            f"{decay_threshold:.0e} within the learning window; "
            "long-time propagation may be inaccurate"
        )
        warns.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return PipelineResult(
        config=cfg,
        preparations=preps,
        trajectories=trajectories,
        maps=maps,
        tensors=tensors,
        cutoff=tensors.cutoff,
        reports=reports,
        warnings=warns,
    )


def monomer_pipeline(params, chain, cfg, learn_steps, **kw):
    def builder(rho0):
        lattice = spin_boson_lattice(params, chain, cfg.d)
        state = monomer_initial_state(cfg, rho0, chain)
        return state, lattice

    return run_pipeline(builder, params.d_sys, cfg, learn_steps, **kw)


def dimer_pipeline(params, chain_left, chain_right, cfg, learn_steps, **kw):
    def builder(rho0):
        lattice = dimer_lattice(params, chain_left, chain_right, cfg.d)
        state = dimer_initial_state(cfg, rho0, chain_left, chain_right)
        return state, lattice

    return run_pipeline(builder, params.d_sys, cfg, learn_steps, **kw)


def continue_trajectory(tensors, cutoff, training, extra_steps):
    """Extend a training trajectory by transfer-tensor propagation.

    `training` is a Trajectory; its last `cutoff` states seed the history.
    """
    rhos = training.rhos
    history = [ttm.vec(r) for r in rhos[-cutoff:]] if cutoff <= len(rhos) else [
        ttm.vec(r) for r in rhos
    ]
    out = ttm.propagate(tensors, min(cutoff, len(rhos)), history, extra_steps)
    d = rhos.shape[1]
    new = np.array([ttm.unvec(v, d) for v in out])
    return Trajectory(dt=training.dt, rhos=np.concatenate([rhos, new]))


def ttm_trajectory(tensors, cutoff, rho0, steps):
    """Propagate an initial state with maps implicit in the tensors.

    For n <= cutoff the recursion with truncated history reproduces the
    training maps exactly; beyond that it is the memory-truncated
    propagation.
    """
    out = ttm.propagate(tensors, cutoff, [ttm.vec(rho0)], steps)
    d = np.asarray(rho0).shape[0]
    rhos = np.concatenate(
        [np.asarray(rho0, dtype=complex)[None], np.array([ttm.unvec(v, d) for v in out])]
    )
    return Trajectory(dt=tensors.dt, rhos=rhos)


@dataclass
class SteadyStateResult:
    rho: np.ndarray
    hitting_time: float
    converged: bool
    steps: int


def steady_state(tensors, cutoff, rho0, tol=1e-8, max_steps=200000, window=20):
    """Iterate the transfer-tensor recursion until the state stops moving.

    Convergence requires the trace-norm step difference to stay below `tol`
    over `window` consecutive steps.
    """
    d = np.asarray(rho0).shape[0]
    hist = [ttm.vec(rho0)]
    quiet = 0
    prev = hist[-1]
    n = 0
    while n < max_steps:
        block = ttm.propagate(tensors, min(cutoff, len(hist)), hist, 1)
        cur = block[0]
        hist.append(cur)
        if len(hist) > cutoff:
            hist.pop(0)
        n += 1
        diff = ttm.unvec(cur - prev, d)
        dist = trace_norm(diff)
        prev = cur
        if dist < tol:
            quiet += 1
            if quiet >= window:
                return SteadyStateResult(
                    rho=ttm.unvec(cur, d),
                    hitting_time=n * tensors.dt,
                    converged=True,
                    steps=n,
                )
        else:
            quiet = 0
    return SteadyStateResult(
        rho=ttm.unvec(prev, d), hitting_time=max_steps * tensors.dt,
        converged=False, steps=max_steps,
    )


def trace_norm(mat):
    return float(np.abs(np.linalg.svd(mat, compute_uv=False)).sum())


def trace_distance(a, b):
    return 0.5 * trace_norm(np.asarray(a) - np.asarray(b))


def dipole_correlation(params, maps, tensors, total_steps, decay_warn=1e-2):
    """Two-time dipole correlation from the learned linear maps.

    C(t_k) = tr[mu . Phi_k(mu rho0)] with rho0 = |g><g| (bath thermal,
    implicit in the maps); Phi_k is E_k within the training window and the
    transfer-tensor recursion beyond it.  Relies on linearity of the maps on
    the full operator space.
    """
    mu = params.dipole_operator()
    rho0 = np.zeros((3, 3), dtype=complex)
    rho0[0, 0] = 1.0
    x0 = ttm.vec(mu @ rho0)
    M = len(maps)
    d = 3
    vals = np.empty(total_steps + 1, dtype=complex)
    muvec = ttm.vec(mu.conj().T).conj()

    def corr(xv):
        return complex(muvec @ xv)

    vals[0] = corr(x0)
    states = [x0]
    n_map = min(M, total_steps)
    for k in range(1, n_map + 1):
        xk = maps.maps[k - 1] @ x0
        vals[k] = corr(xk)
        states.append(xk)
    if total_steps > M:
        cutoff = tensors.cutoff
        history = states[-cutoff:]
        out = ttm.propagate(tensors, min(cutoff, len(history)), history, total_steps - M)
        for i, xv in enumerate(out):
            vals[M + 1 + i] = corr(xv)
    if abs(vals[-1]) > decay_warn * max(abs(vals[0]), 1e-300):
        warnings.warn(
            "dipole correlation has not decayed by the end of the window; "
            "spectrum resolution may suffer",
            RuntimeWarning,
            stacklevel=2,
        )
    return vals


@dataclass
class Spectrum:
    """Absorption spectrum on a uniform frequency grid."""

    omega: np.ndarray
    absorption: np.ndarray
    window: str


def absorption_spectrum(corr, dt, window="hann"):
    """Real part of the finite-window Fourier transform of C(t).

    Frequencies 2 pi k / tau with tau the record length; the kernel is
    e^{+i omega t}, so a correlation e^{-i w0 t} peaks at +w0.
    """
    corr = np.asarray(corr, dtype=complex)
    n = corr.size
    if n < 2:
        raise ValueError("need at least two correlation samples")
    if window == "hann":
        # one-sided record: taper the far end only
        win = np.hanning(2 * n)[n:]
    elif window == "rect":
        win = np.ones(n)
    else:
        raise ValueError(f"unknown window {window!r}")
    data = corr * win
    amp = dt * n * np.fft.ifft(data)
    tau = n * dt
    omega = 2.0 * np.pi * np.arange(n) / tau
    # present symmetric around zero
    omega = np.where(omega > np.pi / dt, omega - 2.0 * np.pi / dt, omega)
    order = np.argsort(omega)
    return Spectrum(omega=omega[order], absorption=amp.real[order], window=window)
