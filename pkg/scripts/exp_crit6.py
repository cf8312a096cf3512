"""Trial run for the J2 pipeline self-consistency criterion."""
import time
import numpy as np

from chaintensor import models, spectral, tns, ttm

J2 = spectral.SpectralDensity.power_law_exp(1.0, 5, 0.3, 10.0)
co = spectral.recurrence_coefficients(J2, 30)
ch = spectral.chain_hamiltonian(co)
p = models.SpinBosonParams()
cfg = tns.EvolutionConfig(n_chain=30, d=4, d_sys=2, chi=24, dt=0.1, beta=1.0)

t0 = time.time()
res = models.monomer_pipeline(p, ch, cfg, 100, leak_check_every=20)
print("learning wall", time.time() - t0, flush=True)
print("K", res.cutoff, "decayed", res.tensors.decayed)
n = res.tensors.norms
print("norm ratio T1/Tlast", n[0], n[-1], n[-1] / n[0])
print("min rel norm", (n / n[0]).min())

# independent longer run from |e><e| (equals preparation 0 extended)
t0 = time.time()
state = models.monomer_initial_state(cfg, models.EXCITED_PROJECTOR, ch)
lat = models.spin_boson_lattice(p, ch, cfg.d)
full, rep = tns.evolve(state, lat, cfg, 150, leak_check_every=20)
print("full run wall", time.time() - t0, "warnings", rep.warnings, flush=True)
print("leakage", rep.leakage_max, "wdisc", rep.max_discarded_weight)

errs = {}
for learn in (25, 50, 100):
    maps_l = ttm.DynamicalMapSet(dt=cfg.dt, maps=res.maps.maps[:learn])
    ts = ttm.tensors_from_maps(maps_l)
    k = min(ts.cutoff, learn)
    training = tns.Trajectory(dt=cfg.dt, rhos=full.rhos[: learn + 1])
    ext = models.continue_trajectory(ts, len(maps_l), training, 150 - learn)
    td = [
        models.trace_distance(a, b)
        for a, b in zip(ext.rhos[101:], full.rhos[101:])
    ]
    errs[learn] = max(td)
    print("learn", learn, "K", ts.cutoff, "max td overlap", max(td), flush=True)
print("monotone", errs[25] > errs[50] > errs[100])
np.save("/tmp/crit6_full.npy", full.rhos)
