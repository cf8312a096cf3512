"""Trial: steady-state excited population vs inverse temperature."""
import math
import time

import numpy as np

from chaintensor import models, oracle, spectral, tns, ttm

J1 = spectral.SpectralDensity.power_law_exp(1.8, 3, 0.3, 10.0)
N = 12
co = spectral.recurrence_coefficients(J1, N)
ch = spectral.chain_hamiltonian(co)
print("eta0", ch.eta0, "omega range", ch.omega.min(), ch.omega.max())
p = models.SpinBosonParams()

for beta in (0.25, 0.5, 1.0, 2.0, 5.0, 10.0):
    cfg = tns.EvolutionConfig(n_chain=N, d=6, d_sys=2, chi=12, dt=0.1, beta=beta)
    t0 = time.time()
    res = models.monomer_pipeline(p, ch, cfg, 60, leak_check_every=20)
    ss = models.steady_state(res.tensors, res.tensors.cutoff, models.EXCITED_PROJECTOR)
    pop = float(ss.rho[0, 0].real)
    gibbs = oracle.gibbs_state(p.hamiltonian(), beta)
    print(
        f"beta {beta:5.2f} pop {pop:.6f} gibbs_pop {gibbs[0,0].real:.6f} "
        f"K {res.cutoff} decayed {res.tensors.decayed} conv {ss.converged} "
        f"hit {ss.hitting_time:.1f} wall {time.time()-t0:.1f}",
        flush=True,
    )
