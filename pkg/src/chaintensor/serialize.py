"""File formats: trajectory CSV, chain-coefficient CSV, sidecar JSON.

All energies are in units of eps and times in 1/eps; every CSV carries a
comment header line stating this.
"""
from __future__ import annotations

import json

import numpy as np

from .tns import Trajectory

UNITS_COMMENT = "# units: energies in eps, times in 1/eps\n"


def write_trajectory_csv(path, traj):
    """CSV with header t,re_rho_00,im_rho_00,... (row-major flattening)."""
    d = traj.rhos.shape[1]
    cols = []
    for i in range(d):
        for j in range(d):
            cols.append(f"re_rho_{i}{j}")
            cols.append(f"im_rho_{i}{j}")
    with open(path, "w") as fh:
        fh.write(UNITS_COMMENT)
        fh.write("t," + ",".join(cols) + "\n")
        for t, rho in zip(traj.times, traj.rhos):
            flat = rho.flatten(order="C")
            cells = [f"{t:.12g}"]
            for z in flat:
                cells.append(f"{z.real:.15g}")
                cells.append(f"{z.imag:.15g}")
            fh.write(",".join(cells) + "\n")


def read_trajectory_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    times = data[:, 0]
    d = round(((data.shape[1] - 1) // 2) ** 0.5)
    re = data[:, 1::2]
    im = data[:, 2::2]
    rhos = (re + 1j * im).reshape(-1, d, d)
    dt = float(times[1] - times[0]) if times.size > 1 else 0.0
    return Trajectory(dt=dt, rhos=rhos)


def write_chain_csv(path, coeff, chain):
    """Recurrence pairs and the derived chain parameters, one row per site."""
    n = len(coeff)
    with open(path, "w") as fh:
        fh.write(UNITS_COMMENT)
        fh.write("k,alpha,beta,omega,eta\n")
        for k in range(n):
            eta = chain.eta0 if k == 0 else chain.hop[k - 1]
            fh.write(
                f"{k},{coeff.alpha[k]:.15g},{coeff.beta[k]:.15g},"
                f"{chain.omega[k]:.15g},{eta:.15g}\n"
            )


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_spectrum_csv(path, spectrum):
    with open(path, "w") as fh:
        fh.write(UNITS_COMMENT)
        fh.write("omega,absorption\n")
        for w, a in zip(spectrum.omega, spectrum.absorption):
            fh.write(f"{w:.12g},{a:.15g}\n")


def write_steady_scan_csv(path, betas, populations):
    with open(path, "w") as fh:
        fh.write(UNITS_COMMENT)
        fh.write("beta,pop_excited\n")
        for b, p in zip(betas, populations):
            fh.write(f"{b:.12g},{p:.15g}\n")


def load_tabulated_density_csv(path):
    """Two-column CSV (omega, J) with header line omega,J."""
    with open(path) as fh:
        first = fh.readline().strip()
    skip = 1 if first.replace(" ", "").lower().startswith("omega,j") else 0
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    return data[:, 0], data[:, 1]
