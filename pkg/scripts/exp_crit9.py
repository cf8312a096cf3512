"""Trial: dimer absorption peaks, decoupled and progressively coupled."""
import math
import time

import numpy as np
from scipy.signal import find_peaks

from chaintensor import models, spectral, tns, ttm

p = models.DimerParams()
mid = 1.5
half = math.sqrt(0.61)

# decoupled: zero system-chain coupling, real TEBD run
chain0 = spectral.ChainHamiltonian(
    eta0=0.0, omega=np.array([0.5, 1.0]), hop=np.array([0.3])
)
cfg = tns.EvolutionConfig(n_chain=2, d=2, d_sys=3, chi=8, dt=0.05)
t0 = time.time()
res = models.dimer_pipeline(p, chain0, chain0, cfg, 1200, leak_check_every=0)
corr = models.dipole_correlation(p, res.maps, res.tensors, 1200)
spec = models.absorption_spectrum(corr, cfg.dt)
peaks, _ = find_peaks(spec.absorption, height=0.05 * spec.absorption.max())
got = np.sort(spec.omega[peaks])
bin_w = 2 * np.pi / (1201 * cfg.dt)
print("decoupled peaks", got, "expect", mid - half, mid + half, "bin", bin_w,
      "wall", time.time() - t0, flush=True)

# coupled: J1-type bath at three strengths, pure (beta = inf) chains
for lam in (0.018, 0.18, 1.8):
    J = spectral.SpectralDensity.power_law_exp(lam, 3, 0.3, 6.0)
    N = 10
    ch = spectral.chain_hamiltonian(spectral.recurrence_coefficients(J, N))
    cfgc = tns.EvolutionConfig(n_chain=N, d=4, d_sys=3, chi=16, dt=0.05)
    t0 = time.time()
    resc = models.dimer_pipeline(p, ch, ch, cfgc, 800, leak_check_every=100)
    corr = models.dipole_correlation(p, resc.maps, resc.tensors, 800)
    spec = models.absorption_spectrum(corr, cfgc.dt)
    sel = (spec.omega > mid) & (spec.omega < 4.0)
    ups, _ = find_peaks(spec.absorption[sel],
                        height=0.05 * spec.absorption[sel].max())
    print(f"lam {lam}: eta0 {ch.eta0:.4f} upper peaks",
          np.round(spec.omega[sel][ups], 3),
          "warn", len(resc.warnings), "wall", round(time.time() - t0, 1),
          flush=True)
    np.save(f"/tmp/crit9_spec_{lam}.npy",
            np.vstack([spec.omega, spec.absorption]))
