"""Figure rendering for the CLI report path.

Each function takes already-computed arrays and writes a PNG next to the
delimited output.  Matplotlib runs with the Agg backend; nothing here is
interactive.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def population_figure(path, times, rhos, learn_time=None):
    """Excited-state population (element rho_00) against time."""
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(times, rhos[:, 0, 0].real, lw=1.2)
    if learn_time is not None:
        ax.axvline(learn_time, color="tab:orange", ls="--", lw=1, label="learning window")
        ax.legend(frameon=False)
    ax.set_xlabel(r"$t\ [1/\epsilon]$")
    ax.set_ylabel(r"excited population")
    _save(fig, path)


def norm_decay_figure(path, times, norms):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.semilogy(times, np.maximum(norms, 1e-300), marker=".", lw=1)
    ax.set_xlabel(r"$t\ [1/\epsilon]$")
    ax.set_ylabel(r"$\Vert T_k \Vert_F$")
    _save(fig, path)


def spectrum_figure(path, omega, absorption):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(omega, absorption, lw=1.2)
    ax.set_xlabel(r"$\omega\ [\epsilon]$")
    ax.set_ylabel("absorption [arb.]")
    _save(fig, path)


def chain_figure(path, omega, eta):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    k = np.arange(omega.size)
    ax.plot(k, omega, marker="o", ms=3, lw=1, label=r"$\omega_n$")
    ax.plot(k[: eta.size], eta, marker="s", ms=3, lw=1, label=r"$\eta_n$")
    ax.set_xlabel("site")
    ax.set_ylabel(r"energy $[\epsilon]$")
    ax.legend(frameon=False)
    _save(fig, path)


def bench_figure(path, t_bath, wall, fit_constant):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(t_bath, wall, "o", label="measured")
    grid = np.linspace(0, max(t_bath) * 1.05, 200)
    ax.plot(grid, fit_constant * grid**2, lw=1, label=r"$c\,t_{\mathrm{bath}}^2$ fit")
    ax.set_xlabel(r"$t_{\mathrm{bath}}\ [1/\epsilon]$")
    ax.set_ylabel("wall time [s]")
    ax.legend(frameon=False)
    _save(fig, path)
