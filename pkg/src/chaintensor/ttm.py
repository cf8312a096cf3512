"""Dynamical maps, transfer tensors, memory kernel and long-time propagation.

Reduced dynamics with a separable initial condition is encoded by linear
maps E_k on the vectorized system density matrix, rho(t_k) = E_k rho(0).
Transfer tensors are defined iteratively,

    T_n = E_n - sum_{m=1}^{n-1} T_{n-m} E_m,

and propagate the state through rho(t_n) = sum_{k<=K} T_k rho(t_{n-k}) once
the tensor norms have decayed; K is the retained memory depth.  Vectorization
is column-major throughout.
"""
from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"CTTM"


class IllPosedBasisError(ValueError):
    """Preparation basis does not span the system's matrix space."""


def vec(mat):
    """Column-major vectorization."""
    return np.asarray(mat).flatten(order="F")


def unvec(v, d=None):
    v = np.asarray(v)
    if d is None:
        d = round(v.size**0.5)
    return v.reshape(d, d, order="F")


def physical_preparations(d):
    """d^2 pure preparations forming a complete Hermitian operator basis.

    Projectors |i><i| plus, for each pair i < j, the +1 eigenstates of the
    real and imaginary pair coherences.  A simulator can be initialized in
    any of them directly; their span is the full matrix space.
    """
    preps = []
    for i in range(d):
        v = np.zeros(d, dtype=complex)
        v[i] = 1.0
        preps.append(np.outer(v, v.conj()))
    for i in range(d):
        for j in range(i + 1, d):
            for phase in (1.0, 1.0j):
                v = np.zeros(d, dtype=complex)
                v[i] = 1.0 / np.sqrt(2)
                v[j] = phase / np.sqrt(2)
                preps.append(np.outer(v, v.conj()))
    return preps


@dataclass
class DynamicalMapSet:
    """Maps E_k (k = 1..M) on the vectorized system space, at step dt."""

    dt: float
    maps: np.ndarray  # (M, D, D) with D = d_sys^2

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=complex)
        if self.maps.ndim != 3 or self.maps.shape[1] != self.maps.shape[2]:
            raise ValueError("maps must have shape (M, D, D)")

    @property
    def d_sys(self):
        return round(self.maps.shape[1] ** 0.5)

    def __len__(self):
        return self.maps.shape[0]

    def trace_preservation_defect(self):
        """Worst deviation of tr(E_k rho) from tr(rho) over the map set."""
        d = self.d_sys
        tvec = vec(np.eye(d)).conj()
        defects = np.abs(tvec @ self.maps - tvec[None, :])
        return float(defects.max())

    def hermiticity_defect(self):
        """Worst violation of E(X^dag) = E(X)^dag over a Hermitian basis probe."""
        d = self.d_sys
        worst = 0.0
        rng_basis = np.eye(d * d)
        for col in range(d * d):
            x = unvec(rng_basis[:, col].astype(complex), d)
            for e in self.maps:
                out = unvec(e @ vec(x), d)
                out_dag = unvec(e @ vec(x.conj().T), d)
                worst = max(worst, float(np.linalg.norm(out.conj().T - out_dag)))
        return worst


@dataclass
class TransferTensorSet:
    """Transfer tensors T_k with their Frobenius-norm decay record."""

    dt: float
    tensors: np.ndarray  # (M, D, D)
    cutoff: int
    norms: np.ndarray = field(default=None)
    decayed: bool = True

    def __post_init__(self):
        self.tensors = np.asarray(self.tensors, dtype=complex)
        if self.norms is None:
            self.norms = np.linalg.norm(self.tensors, axis=(1, 2))

    @property
    def d_sys(self):
        return round(self.tensors.shape[1] ** 0.5)

    def __len__(self):
        return self.tensors.shape[0]


def maps_from_trajectories(preparations, trajectories, dt, cond_max=1e8):
    """Assemble dynamical maps from trajectories of a preparation basis.

    `preparations` are d_sys^2 matrices spanning the system's matrix space
    (non-Hermitian basis elements may be synthesized by linear combination
    before calling); `trajectories[j]` is the (steps+1, d, d) evolution of
    preparation j.  E_k satisfies vec(rho_j(t_k)) = E_k vec(prep_j) exactly
    on the training set.
    """
    D = len(preparations)
    d = preparations[0].shape[0]
    if D != d * d:
        raise IllPosedBasisError(f"need {d * d} preparations, got {D}")
    steps = {np.asarray(t).shape[0] for t in trajectories}
    if len(trajectories) != D or len(steps) != 1:
        raise ValueError("one trajectory per preparation, all of equal length")
    n_times = steps.pop()
    P = np.column_stack([vec(p) for p in preparations])
    if np.linalg.cond(P) > cond_max:
        raise IllPosedBasisError("preparation basis is numerically rank-deficient")
    R = np.empty((n_times, D, D), dtype=complex)
    for j, traj in enumerate(trajectories):
        traj = np.asarray(traj)
        R[:, :, j] = traj.reshape(n_times, D, order="F") if traj.ndim == 2 else np.array(
            [vec(m) for m in traj]
        )
    Pinv = np.linalg.inv(P)
    maps = np.einsum("kab,bc->kac", R[1:], Pinv)
    return DynamicalMapSet(dt=dt, maps=maps)


def tensors_from_maps(maps, threshold=1e-7):
    """Iterative transfer-tensor extraction; also selects the memory cutoff."""
    E = maps.maps
    M = E.shape[0]
    T = np.empty_like(E)
    for n in range(M):
        acc = E[n].copy()
        for m in range(n):
            acc -= T[n - 1 - m] @ E[m]
        T[n] = acc
    norms = np.linalg.norm(T, axis=(1, 2))
    ts = TransferTensorSet(dt=maps.dt, tensors=T, cutoff=M, norms=norms)
    k, decayed = select_cutoff(ts, threshold)
    ts.cutoff = k
    ts.decayed = decayed
    return ts


def select_cutoff(tensors, threshold=1e-7):
    """Smallest K with all later tensor norms below threshold * ||T_1||.

    Returns (K, decayed); if no such K exists K = M and decayed is False.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    norms = tensors.norms
    M = norms.size
    ref = norms[0] if norms[0] > 0 else 1.0
    rel = norms / ref
    k = M
    for i in range(M - 1, -1, -1):
        if rel[i] >= threshold:
            k = i + 1
            break
        k = i
    if k == 0:
        k = 1
    decayed = bool(np.all(rel[k:] < threshold)) and k < M
    if k == M:
        decayed = False
    return k, decayed


def reconstruct_maps(tensors):
    """Invert the iterative definition: E_n from the T's (identity check)."""
    T = tensors.tensors
    M = T.shape[0]
    E = np.empty_like(T)
    for n in range(M):
        acc = T[n].copy()
        for m in range(n):
            acc += T[n - 1 - m] @ E[m]
        E[n] = acc
    return DynamicalMapSet(dt=tensors.dt, maps=E)


def propagate(tensors, cutoff, history, steps, trace_warn=1e-3):
    """Multiplicative long-time propagation.

    `history` holds the most recent vectorized states, oldest first, at
    least one and at most `cutoff` entries; missing older history is treated
    as absent memory (valid when the run starts from a separable initial
    condition at t=0 and the history begins there).  Returns an array of the
    next `steps` vectorized states.
    """
    T = tensors.tensors
    if cutoff > T.shape[0]:
        raise ValueError("cutoff exceeds available tensors")
    D = T.shape[1]
    d = round(D**0.5)
    hist = [np.asarray(h, dtype=complex).reshape(D) for h in history]
    if not 1 <= len(hist) <= cutoff:
        raise ValueError("history length must be in [1, cutoff]")
    out = np.empty((steps, D), dtype=complex)
    tvec = vec(np.eye(d)).conj()
    warned = False
    for n in range(steps):
        acc = np.zeros(D, dtype=complex)
        for k in range(1, min(cutoff, len(hist)) + 1):
            acc += T[k - 1] @ hist[-k]
        if not np.all(np.isfinite(acc)):
            raise FloatingPointError(f"NaN during transfer-tensor propagation at step {n}")
        out[n] = acc
        hist.append(acc)
        if len(hist) > cutoff:
            hist.pop(0)
        drift = abs(tvec @ acc - 1.0)
        if drift > trace_warn and not warned:
            warnings.warn(
                f"trace drift {drift:.2e} beyond {trace_warn:.0e} during propagation",
                RuntimeWarning,
                stacklevel=2,
            )
            warned = True
    return out


def liouvillian_from_first_tensor(t1, dt):
    """System Liouvillian and Hermitian-generator estimate from T_1.

    L_s = i (T_1 - 1)/dt.  The Hamiltonian is the traceless Hermitian H
    whose commutator superoperator best matches L_s in least squares; the
    relative residual is returned with it (large at strong coupling, where
    E_1 carries O(dt^2) bath content).
    """
    t1 = np.asarray(t1, dtype=complex)
    if dt <= 0:
        raise ValueError("dt must be positive")
    D = t1.shape[0]
    d = round(D**0.5)
    ls = 1j * (t1 - np.eye(D)) / dt
    basis = hermitian_traceless_basis(d)
    cols = np.column_stack([commutator_superoperator(b).flatten() for b in basis])
    target = ls.flatten()
    A = np.vstack([cols.real, cols.imag])
    y = np.concatenate([target.real, target.imag])
    coeff, *_ = np.linalg.lstsq(A, y, rcond=None)
    h = sum(c * b for c, b in zip(coeff, basis))
    fit = cols @ coeff
    residual = float(np.linalg.norm(fit - target))
    scale = float(np.linalg.norm(target)) or 1.0
    return ls, h, residual / scale


def hermitian_traceless_basis(d):
    """Generalized Gell-Mann basis (orthonormal in Frobenius inner product)."""
    basis = []
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2)
            basis.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = -1j / np.sqrt(2)
            m[j, i] = 1j / np.sqrt(2)
            basis.append(m)
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1.0
        diag[k] = -k
        basis.append(np.diag(diag).astype(complex) / np.linalg.norm(diag))
    return basis


def commutator_superoperator(h):
    """Superoperator of rho -> [h, rho] under column-major vectorization."""
    d = h.shape[0]
    eye = np.eye(d)
    return np.kron(eye, h) - np.kron(h.T, eye)


def memory_kernel(tensors, dt=None):
    """Discretized memory-kernel samples K_k = T_k / dt^2 for k >= 2.

    The first tensor is excluded: it carries the identity and the system
    Liouvillian rather than pure kernel content.
    """
    dt = tensors.dt if dt is None else dt
    if dt <= 0:
        raise ValueError("dt must be positive")
    return tensors.tensors[1:] / dt**2


def save_tensors(path, tensors):
    """Binary container: magic, JSON header, row-major complex doubles."""
    header = {
        "d_sys": tensors.d_sys,
        "dt": tensors.dt,
        "M": len(tensors),
        "K": tensors.cutoff,
        "decayed": tensors.decayed,
        "norms": tensors.norms.tolist(),
    }
    blob = json.dumps(header).encode()
    data = np.ascontiguousarray(tensors.tensors, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(data.tobytes())


def load_tensors(path):
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path} is not a transfer-tensor container")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        D = header["d_sys"] ** 2
        data = np.frombuffer(fh.read(), dtype=np.complex128)
    tensors = data.reshape(header["M"], D, D)
    return TransferTensorSet(
        dt=header["dt"],
        tensors=tensors,
        cutoff=header["K"],
        norms=np.asarray(header["norms"]),
        decayed=header["decayed"],
    )


def export_norm_decay(path, tensors):
    """CSV of ||T_k|| against t_k for decay plots."""
    times = tensors.dt * np.arange(1, len(tensors) + 1)
    with open(path, "w") as fh:
        fh.write("t,norm\n")
        for t, n in zip(times, tensors.norms):
            fh.write(f"{t:.12g},{n:.12g}\n")
