"""Dense exact references for small system-chain instances.

Everything here works on the full Hilbert (or Liouville) space and is
intended for certification of the tensor-network engine and the transfer
tensor machinery at small sizes only.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .tns import creation_operator, displacement_coupling, number_operator

DEFAULT_DIM_CAP = 4096


class DimensionCapError(RuntimeError):
    """Requested dense dimension exceeds the configured cap."""


def dense_chain_hamiltonian(h_sys, coupling_op, chain, d, dim_cap=DEFAULT_DIM_CAP):
    """Full Hamiltonian of system + N truncated oscillators, system first.

    Built from the same chain parameters as the tensor-network lattice:
    site frequencies chain.omega, hops chain.hop and system coupling
    chain.eta0 through `coupling_op`.
    """
    h_sys = np.asarray(h_sys, dtype=complex)
    d_sys = h_sys.shape[0]
    n = len(chain)
    dim = d_sys * d**n
    if dim > dim_cap:
        raise DimensionCapError(f"dense dimension {dim} exceeds cap {dim_cap}")
    dims = [d_sys] + [d] * n

    def embed(op, site):
        left = int(np.prod(dims[:site]))
        right = int(np.prod(dims[site + 1 :]))
        return np.kron(np.kron(np.eye(left), op), np.eye(right))

    num = number_operator(d)
    disp = displacement_coupling(d)
    bdag = creation_operator(d)
    h = embed(h_sys, 0)
    h = h + chain.eta0 * embed(np.asarray(coupling_op, dtype=complex), 0) @ embed(disp, 1)
    for k in range(n):
        h = h + chain.omega[k] * embed(num, k + 1)
    for k in range(n - 1):
        hop = np.kron(bdag, bdag.conj().T) + np.kron(bdag.conj().T, bdag)
        left = int(np.prod(dims[: k + 1]))
        right = int(np.prod(dims[k + 3 :]))
        h = h + chain.hop[k] * np.kron(np.kron(np.eye(left), hop), np.eye(right))
    return h, dims


def partial_trace_to_system(rho_full, dims):
    """Trace out everything but the first factor."""
    d_sys = dims[0]
    rest = int(np.prod(dims[1:]))
    r = rho_full.reshape(d_sys, rest, d_sys, rest)
    return np.einsum("arbr->ab", r)


def dense_evolve(h, dims, rho0_full, dt, steps, integrator="eigh"):
    """Exact unitary propagation, returning reduced system states per step.

    integrator "eigh" diagonalizes H once; "expm" uses the scaled-and-squared
    matrix exponential of the step.  Both agree to machine precision and
    serve as mutual cross-checks.
    """
    if integrator == "eigh":
        w, v = np.linalg.eigh(h)
        u = (v * np.exp(-1j * dt * w)[None, :]) @ v.conj().T
    elif integrator == "expm":
        u = scipy.linalg.expm(-1j * dt * h)
    else:
        raise ValueError(f"unknown integrator {integrator!r}")
    rho = np.asarray(rho0_full, dtype=complex)
    out = [partial_trace_to_system(rho, dims)]
    for _ in range(steps):
        rho = u @ rho @ u.conj().T
        out.append(partial_trace_to_system(rho, dims))
    return np.array(out)


def gibbs_state(h, beta):
    """exp(-beta H)/Z, computed by eigendecomposition."""
    w, v = np.linalg.eigh(h)
    x = np.exp(-beta * (w - w.min()))
    x /= x.sum()
    return (v * x[None, :]) @ v.conj().T


def lindblad_liouvillian(h, jumps):
    """Liouvillian matrix on the column-major vectorized space.

    `jumps` is a list of (operator, rate) pairs; the generator is
    -i[H, .] + sum_i rate_i D[L_i].
    """
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    eye = np.eye(d)
    L = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for op, rate in jumps:
        op = np.asarray(op, dtype=complex)
        opd_op = op.conj().T @ op
        L += rate * (
            np.kron(op.conj(), op)
            - 0.5 * np.kron(eye, opd_op)
            - 0.5 * np.kron(opd_op.T, eye)
        )
    return L


def semigroup_maps(liouvillian, dt, n_steps):
    """Exactly Markovian map sequence E_k = (e^{L dt})^k."""
    e1 = scipy.linalg.expm(liouvillian * dt)
    maps = np.empty((n_steps, *e1.shape), dtype=complex)
    acc = np.eye(e1.shape[0], dtype=complex)
    for k in range(n_steps):
        acc = e1 @ acc
        maps[k] = acc
    return maps


def semigroup_trajectories(liouvillian, dt, n_steps, preparations):
    """Trajectories of each preparation under the semigroup e^{L t}."""
    maps = semigroup_maps(liouvillian, dt, n_steps)
    d = preparations[0].shape[0]
    trajs = []
    for prep in preparations:
        v0 = np.asarray(prep, dtype=complex).flatten(order="F")
        states = [v0] + [m @ v0 for m in maps]
        trajs.append(np.array([s.reshape(d, d, order="F") for s in states]))
    return trajs


def thermalizing_qubit_jumps(h_sys, beta, rate):
    """Jump operators driving a qubit to the Gibbs state of its Hamiltonian.

    Raising/lowering in the energy eigenbasis with detailed-balance rates.
    """
    w, v = np.linalg.eigh(np.asarray(h_sys, dtype=complex))
    gap = w[1] - w[0]
    lower = np.outer(v[:, 0], v[:, 1].conj())
    raise_ = lower.conj().T
    nbar = 1.0 / np.expm1(beta * gap)
    return [(lower, rate * (nbar + 1.0)), (raise_, rate * nbar)]
