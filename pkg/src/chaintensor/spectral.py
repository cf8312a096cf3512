"""Spectral densities and the orthogonal-polynomial chain mapping.

A harmonic environment is characterized by a non-negative spectral density
J(omega) with a hard cutoff.  With the linear-dispersion convention g(x) = x
the mapping measure is w(x) = J(x)/pi on [0, omega_hc]; the recurrence
coefficients (alpha_k, beta_k) of the monic orthogonal polynomials of that
measure directly give the nearest-neighbour oscillator chain: site
frequencies omega_n = alpha_n, hops sqrt(beta_{n+1}) and a system coupling
sqrt(beta_0).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad


class DegenerateMeasureError(ValueError):
    """The mapping measure is numerically zero."""


class StabilityError(RuntimeError):
    """Loss of positivity in a recurrence coefficient."""

    def __init__(self, index, value):
        super().__init__(f"beta_{index} = {value!r} is not strictly positive")
        self.index = index
        self.value = value


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class SpectralDensity:
    """Analytic or tabulated spectral density with a hard frequency cutoff.

    kind is one of ``drude_lorentz``, ``power_law_exp`` or ``tabulated``;
    ``params`` holds the kind-specific parameters.  Use the constructor
    classmethods rather than instantiating directly.
    """

    kind: str
    params: dict
    omega_hc: float

    def __post_init__(self):
        if self.omega_hc <= 0:
            raise ValueError(f"omega_hc must be positive, got {self.omega_hc}")

    @classmethod
    def drude_lorentz(cls, lam, gamma, omega_hc):
        """Ohmic density lam*gamma*omega/(omega^2 + gamma^2)."""
        if lam < 0 or gamma <= 0:
            raise ValueError("drude_lorentz needs lam >= 0 and gamma > 0")
        return cls("drude_lorentz", {"lam": lam, "gamma": gamma}, omega_hc)

    @classmethod
    def power_law_exp(cls, lam, s, omega_c, omega_hc):
        """Density lam * omega^s * exp(-omega/omega_c)."""
        if lam < 0 or s <= 0 or omega_c <= 0:
            raise ValueError("power_law_exp needs lam >= 0, s > 0, omega_c > 0")
        return cls("power_law_exp", {"lam": lam, "s": s, "omega_c": omega_c}, omega_hc)

    @classmethod
    def tabulated(cls, omega, j, omega_hc=None):
        """Tabulated density, linearly interpolated; zero outside the grid."""
        omega = np.asarray(omega, dtype=float)
        j = np.asarray(j, dtype=float)
        if omega.ndim != 1 or omega.shape != j.shape or omega.size < 2:
            raise ValueError("tabulated grid needs matching 1-d arrays, >= 2 points")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("tabulated omega grid must be strictly increasing")
        if np.any(j < 0):
            raise ValueError("tabulated J values must be non-negative")
        if omega_hc is None:
            omega_hc = float(omega[-1])
        return cls("tabulated", {"omega": omega, "j": j}, float(omega_hc))

    def __call__(self, omega):
        return evaluate(self, omega)


def evaluate(density, omega):
    """Evaluate J(omega); accepts scalars or arrays, requires omega >= 0."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("spectral density is defined for omega >= 0 only")
    p = density.params
    if density.kind == "drude_lorentz":
        val = p["lam"] * p["gamma"] * omega / (omega**2 + p["gamma"] ** 2)
    elif density.kind == "power_law_exp":
        val = p["lam"] * omega ** p["s"] * np.exp(-omega / p["omega_c"])
    elif density.kind == "tabulated":
        val = np.interp(omega, p["omega"], p["j"], left=0.0, right=0.0)
    else:  # pragma: no cover
        raise ValueError(f"unknown spectral density kind {density.kind!r}")
    val = np.where(omega > density.omega_hc, 0.0, val)
    return val if val.ndim else float(val)


def reorganization_energy(density, rtol=1e-9):
    """Integral of J(omega) over [0, omega_hc]."""
    if density.kind == "tabulated":
        return _tabulated_integral(density)
    val, err = quad(
        lambda w: evaluate(density, w),
        0.0,
        density.omega_hc,
        epsrel=rtol,
        epsabs=0.0,
        limit=400,
    )
    if val != 0.0 and err > 10 * rtol * abs(val):
        raise QuadratureError(
            f"quadrature reached relative error {err / abs(val):.2e} > {rtol:.0e}"
        )
    return val


def _tabulated_integral(density):
    # Trapezoid on the native grid, with a Richardson check against the
    # coarsened (every-other-point) grid.
    om = density.params["omega"]
    j = density.params["j"]
    mask = om <= density.omega_hc
    om, j = om[mask], j[mask]
    if om.size < 2:
        return 0.0
    fine = np.trapezoid(j, om)
    coarse = np.trapezoid(j[::2], om[::2])
    return fine + (fine - coarse) / 3.0


@dataclass(frozen=True)
class ChainCoefficients:
    """Monic-orthogonal-polynomial recurrence pairs of the measure J/pi.

    alpha[k] is the recurrence diagonal; beta[0] is the total measure and
    beta[k] (k >= 1) the recurrence off-diagonal squared.
    """

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        # beta[0] may be zero (null measure: decoupled system); later betas
        # must be strictly positive.
        for k, b in enumerate(self.beta):
            if not np.isfinite(b) or b < 0 or (k > 0 and b == 0):
                raise StabilityError(k, b)

    def __len__(self):
        return self.alpha.size


@dataclass(frozen=True)
class ChainHamiltonian:
    """Parameters of the nearest-neighbour oscillator chain.

    eta0 couples the system to site 0; omega[n] are site frequencies and
    hop[n] the coupling between chain sites n and n+1.
    """

    eta0: float
    omega: np.ndarray
    hop: np.ndarray

    def __len__(self):
        return self.omega.size


def quadrature_discretization(density, panels, order=24):
    """Composite Gauss-Legendre nodes/weights of the measure J(x)/pi."""
    x0, w0 = leggauss(order)
    edges = np.linspace(0.0, density.omega_hc, panels + 1)
    nodes = []
    weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        x = 0.5 * (b - a) * x0 + 0.5 * (a + b)
        nodes.append(x)
        weights.append(0.5 * (b - a) * w0 * evaluate(density, x) / np.pi)
    return np.concatenate(nodes), np.concatenate(weights)


def linear_discretization(density, modes):
    """Midpoint-rule discretization into `modes` equally spaced modes."""
    dx = density.omega_hc / modes
    x = (np.arange(modes) + 0.5) * dx
    w = evaluate(density, x) / np.pi * dx
    return x, w


def stieltjes(nodes, weights, n):
    """Discretized Stieltjes procedure for n recurrence pairs.

    Runs on orthonormal polynomials to avoid the overflow of the monic
    recurrence on wide supports.
    """
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not total > 0:
        raise DegenerateMeasureError("measure is numerically zero")
    alpha = np.empty(n)
    beta = np.empty(n)
    beta[0] = total
    q_prev = np.zeros_like(nodes)
    q = np.full_like(nodes, 1.0 / np.sqrt(total))
    for k in range(n):
        alpha[k] = weights @ (nodes * q * q)
        if k == n - 1:
            break
        r = (nodes - alpha[k]) * q - (np.sqrt(beta[k]) if k > 0 else 0.0) * q_prev
        b = weights @ (r * r)
        if not (b > 0) or not np.isfinite(b):
            raise StabilityError(k + 1, b)
        beta[k + 1] = b
        q_prev = q
        q = r / np.sqrt(b)
    return ChainCoefficients(alpha=alpha, beta=beta)


def lanczos_coefficients(nodes, weights, n):
    """Recurrence pairs via Lanczos tridiagonalization of diag(nodes).

    Independent cross-check route for `recurrence_coefficients`: with the
    starting vector sqrt(weights) the Jacobi matrix of the discrete measure
    is recovered.  Full reorthogonalization keeps it accurate to ~1e-12.
    """
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not total > 0:
        raise DegenerateMeasureError("measure is numerically zero")
    alpha = np.empty(n)
    beta = np.empty(n)
    beta[0] = total
    v = np.sqrt(weights / total)
    basis = np.empty((n, nodes.size))
    basis[0] = v
    v_prev = np.zeros_like(v)
    off = 0.0
    for k in range(n):
        w = nodes * v
        alpha[k] = v @ w
        if k == n - 1:
            break
        w = w - alpha[k] * v - off * v_prev
        # full reorthogonalization, twice for safety
        for _ in range(2):
            w -= basis[: k + 1].T @ (basis[: k + 1] @ w)
        off = np.linalg.norm(w)
        if not (off > 0) or not np.isfinite(off):
            raise StabilityError(k + 1, off**2)
        beta[k + 1] = off**2
        v_prev = v
        v = w / off
        basis[k + 1] = v
    return ChainCoefficients(alpha=alpha, beta=beta)


def recurrence_coefficients(density, n, rtol=1e-10, max_panels=4096):
    """Chain-mapping recurrence pairs of the measure J/pi on [0, omega_hc].

    The quadrature grid is refined (panel doubling) until no coefficient
    moves by more than `rtol` relative.
    """
    if n < 1:
        raise ValueError("need n >= 1 coefficients")
    panels = max(32, 2 * n)
    prev = None
    while panels <= max_panels:
        nodes, weights = quadrature_discretization(density, panels)
        coeff = stieltjes(nodes, weights, n)
        if prev is not None:
            scale_a = np.max(np.abs(coeff.alpha)) + 1e-300
            scale_b = np.max(np.abs(coeff.beta)) + 1e-300
            da = np.max(np.abs(coeff.alpha - prev.alpha)) / scale_a
            db = np.max(np.abs(coeff.beta - prev.beta)) / scale_b
            if da < rtol and db < rtol:
                return coeff
        prev = coeff
        panels *= 2
    raise QuadratureError(
        f"recurrence coefficients did not stabilize to {rtol:.0e} "
        f"within {max_panels} quadrature panels"
    )


def chain_hamiltonian(coeff):
    """Chain parameters for linear dispersion: omega_n = alpha_n, hops sqrt(beta)."""
    beta = coeff.beta
    return ChainHamiltonian(
        eta0=float(np.sqrt(beta[0])),
        omega=coeff.alpha.copy(),
        hop=np.sqrt(beta[1:]),
    )
