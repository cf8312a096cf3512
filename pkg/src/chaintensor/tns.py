"""Purified matrix-product-state evolution of a system coupled to an
oscillator chain.

The joint state lives on a line of sites (the system is one of them); every
site carries a physical leg and an ancilla leg of equal dimension, so mixed
states evolve as pure states on the doubled space.  Pure initial states use
ancilla dimension 1 and reduce to ordinary MPS evolution.  Time stepping is
a symmetric second-order Trotter splitting into even/odd bond layers with
SVD truncation to a maximum bond size and a singular-value floor.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

_EIGH_CACHE_MAX = 64


class ResourceError(RuntimeError):
    """Requested dense dimension or bond size exceeds the configured budget."""


class NumericalError(RuntimeError):
    """NaN or non-finite values encountered during propagation."""


@dataclass(frozen=True)
class EvolutionConfig:
    """Truncation and stepping controls for the chain evolution."""

    n_chain: int
    d: int
    d_sys: int
    chi: int
    dt: float
    e0: float = 1e-10
    beta: float = math.inf
    trotter_order: int = 2

    def __post_init__(self):
        if self.n_chain < 1 or self.d < 2 or self.chi < 1:
            raise ValueError("need n_chain >= 1, d >= 2, chi >= 1")
        if self.dt <= 0:
            raise ValueError("time step must be positive")
        if not (0 <= self.e0 < 1):
            raise ValueError("singular-value floor must be in [0, 1)")
        if self.trotter_order != 2:
            raise ValueError("only second-order Trotter splitting is implemented")


@dataclass
class Lattice:
    """Site dimensions and Hamiltonian terms of the one-dimensional geometry.

    site_terms[i] acts on site i alone, bond_terms[i] on sites (i, i+1);
    either entry may be None.  system_site marks where the reduced density
    matrix is read off.
    """

    dims: list
    site_terms: list
    bond_terms: list
    system_site: int = 0

    def __post_init__(self):
        n = len(self.dims)
        if len(self.site_terms) != n or len(self.bond_terms) != n - 1:
            raise ValueError("inconsistent term list lengths")

    @property
    def n_sites(self):
        return len(self.dims)


@dataclass
class TruncationReport:
    """Cumulative truncation diagnostics of a propagation run."""

    max_discarded_weight: float = 0.0
    total_discarded_weight: float = 0.0
    max_bond_dim: int = 1
    clipped_at_floor: int = 0
    renorm_log_total: float = 0.0
    hermitization_max: float = 0.0
    leakage_max: float = 0.0
    warnings: list = field(default_factory=list)

    def merge_bond(self, w_disc, kept, clipped):
        self.max_discarded_weight = max(self.max_discarded_weight, w_disc)
        self.total_discarded_weight += w_disc
        self.max_bond_dim = max(self.max_bond_dim, kept)
        self.clipped_at_floor += clipped

    def to_dict(self):
        return {
            "max_discarded_weight": self.max_discarded_weight,
            "total_discarded_weight": self.total_discarded_weight,
            "max_bond_dim": self.max_bond_dim,
            "clipped_at_floor": self.clipped_at_floor,
            "renorm_log_total": self.renorm_log_total,
            "hermitization_max": self.hermitization_max,
            "leakage_max": self.leakage_max,
            "warnings": list(self.warnings),
        }


def _svd(m):
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


class ChainState:
    """Purified MPS with a mobile orthogonality center.

    Site tensors have shape (Dl, phys, anc, Dr).  Sites left of the center
    are left-canonical, sites right of it right-canonical, so a two-site
    SVD truncation at the center is quasi-optimal.
    """

    def __init__(self, tensors, center=0):
        self.tensors = list(tensors)
        self.center = center

    @classmethod
    def product(cls, site_vectors):
        """Product state from per-site (phys, anc) matrices (or vectors)."""
        tensors = []
        for v in site_vectors:
            v = np.asarray(v, dtype=complex)
            if v.ndim == 1:
                v = v[:, None]
            p, a = v.shape
            tensors.append(v.reshape(1, p, a, 1))
        return cls(tensors, center=0)

    def copy(self):
        return ChainState([t.copy() for t in self.tensors], self.center)

    @property
    def n_sites(self):
        return len(self.tensors)

    def bond_dims(self):
        return [t.shape[3] for t in self.tensors[:-1]]

    def norm(self):
        # valid with the canonical invariant: everything except the center
        # contracts to the identity
        return float(np.linalg.norm(self.tensors[self.center]))

    def scale(self, factor):
        self.tensors[self.center] = self.tensors[self.center] * factor

    def _shift_right(self):
        i = self.center
        A = self.tensors[i]
        dl, p, a, dr = A.shape
        q, r = np.linalg.qr(A.reshape(dl * p * a, dr))
        k = q.shape[1]
        self.tensors[i] = q.reshape(dl, p, a, k)
        B = self.tensors[i + 1]
        self.tensors[i + 1] = np.tensordot(r, B, axes=([1], [0]))
        self.center = i + 1

    def _shift_left(self):
        i = self.center
        A = self.tensors[i]
        dl, p, a, dr = A.shape
        q, r = np.linalg.qr(A.reshape(dl, p * a * dr).T.conj())
        k = q.shape[1]
        self.tensors[i] = q.T.conj().reshape(k, p, a, dr)
        B = self.tensors[i - 1]
        self.tensors[i - 1] = np.tensordot(B, r.T.conj(), axes=([3], [0]))
        self.center = i - 1

    def move_center(self, i):
        while self.center < i:
            self._shift_right()
        while self.center > i:
            self._shift_left()

    def apply_bond_gate(self, b, gate, chi, e0, move="right"):
        """Apply a two-site gate on bond b = (b, b+1) and truncate.

        gate has shape (p_b, p_{b+1}, p_b', p_{b+1}') and acts on the
        physical legs only.  Returns (discarded weight, kept bond size,
        number of singular values clipped at the floor).
        """
        if self.center not in (b, b + 1):
            self.move_center(b)
        A, B = self.tensors[b], self.tensors[b + 1]
        dl, p1, a1 = A.shape[:3]
        p2, a2, dr = B.shape[1:]
        theta = np.tensordot(A, B, axes=([3], [0]))  # dl p1 a1 p2 a2 dr
        theta = np.tensordot(gate, theta, axes=([2, 3], [1, 3]))  # p1 p2 dl a1 a2 dr
        theta = theta.transpose(2, 0, 3, 1, 4, 5)
        u, s, vh = _svd(theta.reshape(dl * p1 * a1, p2 * a2 * dr))
        if not np.all(np.isfinite(s)):
            raise NumericalError("NaN in singular values during bond update")
        total = float(s @ s)
        if total <= 0:
            raise NumericalError("state collapsed to zero norm during bond update")
        snorm = s / math.sqrt(total)
        keep = min(chi, s.size)
        clipped = 0
        if e0 > 0:
            above = int(np.count_nonzero(snorm >= e0))
            clipped = max(0, keep - max(above, 1))
            keep = max(min(keep, above), 1)
        w_disc = float((snorm[keep:] ** 2).sum())
        u = u[:, :keep]
        s = s[:keep]
        vh = vh[:keep]
        if move == "right":
            self.tensors[b] = u.reshape(dl, p1, a1, keep)
            self.tensors[b + 1] = (s[:, None] * vh).reshape(keep, p2, a2, dr)
            self.center = b + 1
        else:
            self.tensors[b] = (u * s[None, :]).reshape(dl, p1, a1, keep)
            self.tensors[b + 1] = vh.reshape(keep, p2, a2, dr)
            self.center = b
        return w_disc, keep, clipped

    def site_density_matrix(self, i):
        """Reduced density matrix of the physical leg of site i."""
        self.move_center(i)
        A = self.tensors[i]
        rho = np.einsum("lpar,lqar->pq", A, A.conj())
        return rho

    def site_expectation(self, i, op):
        rho = self.site_density_matrix(i)
        return complex(np.trace(op @ rho))


def reduced_system(state, lattice):
    """Reduced system density matrix: trace over chain and ancillas.

    The result is Hermitized; the size of the anti-Hermitian part removed is
    returned alongside.
    """
    rho = state.site_density_matrix(lattice.system_site)
    herm_err = float(np.linalg.norm(rho - rho.conj().T))
    rho = 0.5 * (rho + rho.conj().T)
    return rho, herm_err


def _bond_hamiltonian(lattice, b):
    dl, dr = lattice.dims[b], lattice.dims[b + 1]
    h = np.zeros((dl * dr, dl * dr), dtype=complex)
    if lattice.bond_terms[b] is not None:
        h += lattice.bond_terms[b]
    degree = lambda i: (1 if i in (0, lattice.n_sites - 1) else 2)
    if lattice.site_terms[b] is not None:
        h += np.kron(lattice.site_terms[b] / degree(b), np.eye(dr))
    if lattice.site_terms[b + 1] is not None:
        h += np.kron(np.eye(dl), lattice.site_terms[b + 1] / degree(b + 1))
    return h


def bond_gates(lattice, tau, imaginary=False):
    """Exponentiated bond Hamiltonians exp(-i h tau) (or exp(-h tau)).

    Single-site terms are folded into adjacent bonds with degree weights.
    Returns gates reshaped to (p_l, p_r, p_l', p_r').
    """
    gates = []
    for b in range(lattice.n_sites - 1):
        h = _bond_hamiltonian(lattice, b)
        w, v = np.linalg.eigh(h)
        phase = np.exp(-tau * w) if imaginary else np.exp(-1j * tau * w)
        g = (v * phase[None, :]) @ v.conj().T
        dl, dr = lattice.dims[b], lattice.dims[b + 1]
        gates.append(g.reshape(dl, dr, dl, dr))
    return gates


@dataclass
class TrotterGates:
    """Precomputed symmetric-splitting gate layers for one time step."""

    even_half: list
    odd_full: list
    even_bonds: list
    odd_bonds: list
    single_site: np.ndarray | None = None  # one-site lattice only


def build_step_gates(lattice, dt, imaginary=False):
    if lattice.n_sites == 1:
        h = lattice.site_terms[0]
        w, v = np.linalg.eigh(h)
        phase = np.exp(-dt * w) if imaginary else np.exp(-1j * dt * w)
        g = (v * phase[None, :]) @ v.conj().T
        return TrotterGates([], [], [], [], single_site=g)
    half = bond_gates(lattice, dt / 2.0, imaginary)
    full = bond_gates(lattice, dt, imaginary)
    even = list(range(0, lattice.n_sites - 1, 2))
    odd = list(range(1, lattice.n_sites - 1, 2))
    return TrotterGates(
        even_half=[half[b] for b in even],
        odd_full=[full[b] for b in odd],
        even_bonds=even,
        odd_bonds=odd,
    )


def _apply_layer(state, bonds, gates, chi, e0, report, reverse=False):
    order = range(len(bonds) - 1, -1, -1) if reverse else range(len(bonds))
    move = "left" if reverse else "right"
    for k in order:
        w, kept, clipped = state.apply_bond_gate(bonds[k], gates[k], chi, e0, move)
        report.merge_bond(w, kept, clipped)


def trotter_step(state, gates, cfg, report):
    """Advance by one step of the symmetric (even, odd, even) splitting."""
    if gates.single_site is not None:
        A = state.tensors[0]
        state.tensors[0] = np.einsum("pq,lqar->lpar", gates.single_site, A)
    else:
        _apply_layer(state, gates.even_bonds, gates.even_half, cfg.chi, cfg.e0, report)
        _apply_layer(
            state, gates.odd_bonds, gates.odd_full, cfg.chi, cfg.e0, report, reverse=True
        )
        _apply_layer(state, gates.even_bonds, gates.even_half, cfg.chi, cfg.e0, report)
    nrm = state.norm()
    if not np.isfinite(nrm) or nrm <= 0:
        raise NumericalError("state norm became non-finite during evolution")
    state.scale(1.0 / nrm)
    report.renorm_log_total += abs(math.log(nrm))
    return report


@dataclass
class Trajectory:
    """Time series of reduced system density matrices at fixed step dt."""

    dt: float
    rhos: np.ndarray  # (steps + 1, d_sys, d_sys)

    @property
    def times(self):
        return self.dt * np.arange(self.rhos.shape[0])

    def __len__(self):
        return self.rhos.shape[0]


def evolve(state, lattice, cfg, steps, leak_check_every=10, leak_threshold=1e-6):
    """Run `steps` Trotter steps, recording the reduced system state.

    Returns (Trajectory, TruncationReport).  The top-Fock-level occupation
    of every chain site is monitored periodically; exceeding the threshold
    appends a warning to the report.
    """
    report = TruncationReport()
    gates = build_step_gates(lattice, cfg.dt)
    rhos = []
    rho, herr = reduced_system(state, lattice)
    report.hermitization_max = max(report.hermitization_max, herr)
    rhos.append(rho)
    warned = False
    for step in range(1, steps + 1):
        trotter_step(state, gates, cfg, report)
        rho, herr = reduced_system(state, lattice)
        report.hermitization_max = max(report.hermitization_max, herr)
        rhos.append(rho)
        if leak_check_every and step % leak_check_every == 0:
            leak = _top_level_population(state, lattice)
            report.leakage_max = max(report.leakage_max, leak)
            if leak > leak_threshold and not warned:
                report.warnings.append(
                    f"oscillator top-level population {leak:.2e} exceeds "
                    f"{leak_threshold:.0e} at step {step}; increase d"
                )
                warned = True
    return Trajectory(dt=cfg.dt, rhos=np.array(rhos)), report


def _top_level_population(state, lattice):
    worst = 0.0
    for i, dim in enumerate(lattice.dims):
        if i == lattice.system_site:
            continue
        rho = state.site_density_matrix(i)
        worst = max(worst, float(rho[dim - 1, dim - 1].real))
    return worst


def purify_density_matrix(rho, tol=1e-12):
    """(phys, anc) matrix whose self-contraction reproduces rho.

    Pure states get ancilla dimension 1.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if np.linalg.norm(rho - rho.conj().T) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    w, v = np.linalg.eigh(rho)
    if w.min() < -1e-10 or abs(w.sum() - 1.0) > 1e-8:
        raise ValueError("density matrix must be PSD with unit trace")
    w = np.clip(w, 0.0, None)
    keep = np.nonzero(w > tol)[0]
    if keep.size == 0:
        raise ValueError("density matrix is numerically zero")
    cols = v[:, keep] * np.sqrt(w[keep])[None, :]
    return cols  # (d, rank)


def vacuum_chain_vectors(n_chain, d):
    v = np.zeros(d)
    v[0] = 1.0
    return [v.copy() for _ in range(n_chain)]


def chain_thermal_state(chain_lattice, cfg, n_tau_min=10, dtau_max=0.05):
    """Purified Gibbs state of the bare chain at inverse temperature beta.

    beta = inf gives the vacuum product state; beta = 0 the infinite-
    temperature (maximally entangled) product; otherwise the infinite-
    temperature purification is evolved in imaginary time for beta/2.
    """
    d = chain_lattice.dims[0]
    n = chain_lattice.n_sites
    if math.isinf(cfg.beta):
        return ChainState.product(vacuum_chain_vectors(n, d))
    ident = np.eye(d) / math.sqrt(d)
    state = ChainState.product([ident.copy() for _ in range(n)])
    if cfg.beta == 0:
        return state
    tau_total = cfg.beta / 2.0
    n_tau = max(n_tau_min, math.ceil(tau_total / dtau_max))
    dtau = tau_total / n_tau
    gates = build_step_gates(chain_lattice, dtau, imaginary=True)
    report = TruncationReport()
    cfg_ite = dataclasses.replace(cfg, dt=dtau)
    for _ in range(n_tau):
        trotter_step(state, gates, cfg_ite, report)
    state.move_center(0)
    state.scale(1.0 / state.norm())
    return state


def chain_only_lattice(chain, d):
    """Lattice of the bare oscillator chain (no system site)."""
    num = number_operator(d)
    bdag = creation_operator(d)
    site_terms = [w * num for w in chain.omega]
    bond_terms = []
    for t in chain.hop:
        hop = t * (np.kron(bdag, bdag.conj().T) + np.kron(bdag.conj().T, bdag))
        bond_terms.append(hop)
    return Lattice(
        dims=[d] * len(chain),
        site_terms=site_terms,
        bond_terms=bond_terms,
        system_site=0,
    )


def initial_state(cfg, rho_sys, chain, system_on_left=True):
    """Purified product of the system state and the chain Gibbs state.

    The chain part is the vacuum for beta = inf and otherwise the Gibbs
    state of the bare chain Hamiltonian prepared by imaginary-time
    evolution of the infinite-temperature purification.
    """
    rho_sys = np.asarray(rho_sys, dtype=complex)
    sys_vec = purify_density_matrix(rho_sys)
    chain_lat = chain_only_lattice(chain, cfg.d)
    chain_state = chain_thermal_state(chain_lat, cfg)
    sys_tensor = sys_vec.reshape(1, *sys_vec.shape, 1)
    if system_on_left:
        tensors = [sys_tensor] + chain_state.tensors
        return ChainState(tensors, center=1 + chain_state.center)
    tensors = chain_state.tensors + [sys_tensor]
    return ChainState(tensors, center=chain_state.center)


def number_operator(d):
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def creation_operator(d):
    op = np.zeros((d, d), dtype=complex)
    for n in range(d - 1):
        op[n + 1, n] = math.sqrt(n + 1)
    return op


def displacement_coupling(d):
    """b + b^dagger on a truncated Fock space."""
    bdag = creation_operator(d)
    return bdag + bdag.conj().T


@dataclass
class RecurrenceEstimate:
    time: float
    recurred: bool


def recurrence_probe(chain, horizon, dt=0.02, threshold=0.05):
    """Earliest rebound of the first-site occupation after its initial decay.

    A single excitation on site 0 evolves in the one-particle sector of the
    chain (exact: the bare chain conserves excitation number), and the
    occupation of site 0 is followed.  Returns the time of the first local
    maximum at or above `threshold` occurring after the occupation has
    dropped below it; if no such rebound happens within `horizon`, the
    horizon is returned with recurred=False.
    """
    n = len(chain)
    if n == 1 or np.all(chain.hop == 0):
        return RecurrenceEstimate(time=horizon, recurred=False)
    w, v = scipy.linalg.eigh_tridiagonal(chain.omega, chain.hop)
    times = np.arange(0.0, horizon + dt, dt)
    # survival amplitude of the excitation on site 0
    weights = np.abs(v[0]) ** 2
    amp = np.exp(-1j * np.outer(times, w)) @ weights
    occ = np.abs(amp) ** 2
    below = occ < threshold
    if not below.any():
        return RecurrenceEstimate(time=horizon, recurred=False)
    start = int(np.argmax(below))
    for k in range(start + 1, times.size - 1):
        if occ[k] >= threshold and occ[k] >= occ[k - 1] and occ[k] > occ[k + 1]:
            return RecurrenceEstimate(time=float(times[k]), recurred=True)
    return RecurrenceEstimate(time=horizon, recurred=False)
