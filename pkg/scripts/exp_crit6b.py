"""Refined trial: chi=32 learning over 150 steps, truncated-window continuations."""
import time

import numpy as np

from chaintensor import models, spectral, tns, ttm

J2 = spectral.SpectralDensity.power_law_exp(1.0, 5, 0.3, 10.0)
ch = spectral.chain_hamiltonian(spectral.recurrence_coefficients(J2, 30))
p = models.SpinBosonParams()
cfg = tns.EvolutionConfig(n_chain=30, d=4, d_sys=2, chi=32, dt=0.1, beta=1.0, e0=1e-12)

t0 = time.time()
res = models.monomer_pipeline(p, ch, cfg, 150, leak_check_every=50)
print("learning wall", time.time() - t0, flush=True)
print("K", res.cutoff, "decayed", res.tensors.decayed)
n = res.tensors.norms
print("rel norms at k=25,50,100,150:",
      [float(n[k - 1] / n[0]) for k in (25, 50, 100, 150)])
print("tail sum beyond 100 (abs):", float(n[100:].sum()))
print("max wdisc", max(r.max_discarded_weight for r in res.reports),
      "max bond", max(r.max_bond_dim for r in res.reports),
      "leak", max(r.leakage_max for r in res.reports), flush=True)

full = res.trajectories[0]  # preparation 0 is the excited projector
for learn in (25, 50, 100):
    maps_l = ttm.DynamicalMapSet(dt=cfg.dt, maps=res.maps.maps[:learn])
    ts = ttm.tensors_from_maps(maps_l)
    training = tns.Trajectory(dt=cfg.dt, rhos=full.rhos[: learn + 1])
    ext = models.continue_trajectory(ts, len(maps_l), training, 150 - learn)
    td_late = [models.trace_distance(a, b)
               for a, b in zip(ext.rhos[101:], full.rhos[101:])]
    td_own = [models.trace_distance(a, b)
              for a, b in zip(ext.rhos[learn + 1:], full.rhos[learn + 1:])]
    print(f"learn {learn}: max td steps101-150 {max(td_late):.5f} "
          f"max td own-overlap {max(td_own):.5f}", flush=True)
np.save("/tmp/crit6b_norms.npy", n)
np.save("/tmp/crit6b_full.npy", full.rhos)
