"""Batch front-end: config-driven runs of the chain-map / evolve / learn /
propagate / spectrum / bench pipeline.

Configuration is a single JSON document; every physical parameter consumed
by the engine is settable there (numerical tolerances have defaults).  Each
subcommand writes delimited output plus rendered figures, and a run manifest
recording the exact config, tool version and wall times.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import __version__, models, plots, serialize, spectral, tns, ttm

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["spectral", "chain", "tebd"],
    "properties": {
        "spectral": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["drude_lorentz", "power_law_exp", "tabulated"]},
                "params": {"type": "object"},
                "omega_hc": {"type": "number", "exclusiveMinimum": 0},
                "csv": {"type": "string"},
            },
        },
        "chain": {
            "type": "object",
            "required": ["N", "d"],
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "d": {"type": "integer", "minimum": 2},
            },
        },
        "tebd": {
            "type": "object",
            "required": ["chi", "dt"],
            "properties": {
                "chi": {"type": "integer", "minimum": 1},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "e0": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "steps": {"type": "integer", "minimum": 1},
            },
        },
        "ttm": {
            "type": "object",
            "properties": {
                "learn_steps": {"type": "integer", "minimum": 1},
                "threshold": {"type": "number", "exclusiveMinimum": 0},
                "K_override": {"type": "integer", "minimum": 1},
            },
        },
        "model": {
            "type": "object",
            "properties": {
                "type": {"enum": ["monomer", "dimer"]},
                "beta": {"type": ["number", "string"]},
                "eps": {"type": "number"},
                "delta": {"type": "number"},
                "eps1": {"type": "number"},
                "eps2": {"type": "number"},
                "exchange": {"type": "number"},
                "mu1": {"type": "number"},
                "mu2": {"type": "number"},
            },
        },
        "output": {"type": "object"},
        "bench": {
            "type": "object",
            "properties": {
                "t_bath": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "repetitions": {"type": "integer", "minimum": 1},
                "sites_per_time": {"type": "number", "exclusiveMinimum": 0},
                "propagate_steps": {"type": "integer", "minimum": 10},
            },
        },
    },
}


def load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        field = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise click.ClickException(f"config field {field}: {exc.message}")
    return cfg


def build_density(cfg):
    sp = cfg["spectral"]
    kind = sp["kind"]
    params = sp.get("params", {})
    if kind == "drude_lorentz":
        return spectral.SpectralDensity.drude_lorentz(
            params["lam"], params["gamma"], sp["omega_hc"]
        )
    if kind == "power_law_exp":
        return spectral.SpectralDensity.power_law_exp(
            params["lam"], params["s"], params["omega_c"], sp["omega_hc"]
        )
    omega, j = serialize.load_tabulated_density_csv(sp["csv"])
    return spectral.SpectralDensity.tabulated(omega, j, sp.get("omega_hc"))


def build_model(cfg):
    m = cfg.get("model", {})
    if m.get("type", "monomer") == "monomer":
        return models.SpinBosonParams(
            eps=m.get("eps", 1.0), delta=m.get("delta", 0.6)
        )
    return models.DimerParams(
        eps1=m.get("eps1", 1.0),
        eps2=m.get("eps2", 2.0),
        exchange=m.get("exchange", 0.6),
        mu1=m.get("mu1", 1.0),
        mu2=m.get("mu2", 1.0),
    )


def model_beta(cfg):
    raw = cfg.get("model", {}).get("beta", "inf")
    return math.inf if raw in ("inf", "Infinity") else float(raw)


def evolution_config(cfg):
    ch, te = cfg["chain"], cfg["tebd"]
    model = build_model(cfg)
    return tns.EvolutionConfig(
        n_chain=ch["N"],
        d=ch["d"],
        d_sys=model.d_sys,
        chi=te["chi"],
        dt=te["dt"],
        e0=te.get("e0", 1e-10),
        beta=model_beta(cfg),
    )


def chain_from_config(cfg):
    density = build_density(cfg)
    coeff = spectral.recurrence_coefficients(density, cfg["chain"]["N"])
    return coeff, spectral.chain_hamiltonian(coeff)


def write_manifest(outdir, name, cfg, wall_times, extra=None):
    payload = {
        "tool": "chaintensor",
        "version": __version__,
        "subcommand": name,
        "config": cfg,
        "wall_times_s": wall_times,
    }
    if extra:
        payload.update(extra)
    serialize.write_json(outdir / f"{name}_manifest.json", payload)


@click.group()
def main():
    """Chain-mapped open-system simulator with transfer-tensor propagation."""


def common_options(fn):
    fn = click.option(
        "--config", "config_path", required=True, type=click.Path(exists=True)
    )(fn)
    fn = click.option("--out", "outdir", default=".", type=click.Path())(fn)
    fn = click.option("--threads", default=1, show_default=True)(fn)
    fn = click.option("--figures/--no-figures", default=True, show_default=True)(fn)
    return fn


@main.command("chain-map")
@common_options
def chain_map_cmd(config_path, outdir, threads, figures):
    """Write the chain coefficient table for the configured density."""
    cfg = load_config(config_path)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    coeff, chain = chain_from_config(cfg)
    wall = time.perf_counter() - t0
    serialize.write_chain_csv(outdir / "chain_coefficients.csv", coeff, chain)
    if figures:
        eta = np.concatenate([[chain.eta0], chain.hop])
        plots.chain_figure(outdir / "chain_coefficients.png", chain.omega, eta)
    write_manifest(outdir, "chain-map", cfg, {"total": wall})
    click.echo(f"chain-map: wrote {len(coeff)} coefficient pairs")


def _default_rho0(model):
    if isinstance(model, models.SpinBosonParams):
        return models.EXCITED_PROJECTOR.copy()
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _build_run(cfg):
    model = build_model(cfg)
    ecfg = evolution_config(cfg)
    _, chain = chain_from_config(cfg)
    if isinstance(model, models.SpinBosonParams):
        lattice = models.spin_boson_lattice(model, chain, ecfg.d)

        def prep(rho0):
            return models.monomer_initial_state(ecfg, rho0, chain), lattice

    else:
        lattice = models.dimer_lattice(model, chain, chain, ecfg.d)

        def prep(rho0):
            return models.dimer_initial_state(ecfg, rho0, chain, chain), lattice

    return model, ecfg, chain, prep


@main.command("evolve")
@common_options
def evolve_cmd(config_path, outdir, threads, figures):
    """Full tensor-network trajectory from the default initial state."""
    cfg = load_config(config_path)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    steps = cfg["tebd"].get("steps", 100)
    model, ecfg, chain, prep = _build_run(cfg)
    t0 = time.perf_counter()
    state, lattice = prep(_default_rho0(model))
    traj, report = tns.evolve(state, lattice, ecfg, steps)
    wall = time.perf_counter() - t0
    serialize.write_trajectory_csv(outdir / "trajectory.csv", traj)
    serialize.write_json(outdir / "truncation.json", report.to_dict())
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    if figures:
        plots.population_figure(outdir / "trajectory.png", traj.times, traj.rhos)
    write_manifest(outdir, "evolve", cfg, {"total": wall})
    click.echo(f"evolve: {steps} steps, max bond {report.max_bond_dim}")


@main.command("learn")
@common_options
def learn_cmd(config_path, outdir, threads, figures):
    """Learn transfer tensors from basis trajectories."""
    cfg = load_config(config_path)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tt = cfg.get("ttm", {})
    learn_steps = tt.get("learn_steps", cfg["tebd"].get("steps", 100))
    threshold = tt.get("threshold", 1e-7)
    model, ecfg, chain, prep = _build_run(cfg)
    t0 = time.perf_counter()
    result = _run_learning(model, ecfg, prep, learn_steps, threshold, threads)
    wall = time.perf_counter() - t0
    if "K_override" in tt:
        result.tensors.cutoff = min(tt["K_override"], len(result.tensors))
    ttm.save_tensors(outdir / "tensors.ttm", result.tensors)
    ttm.export_norm_decay(outdir / "norm_decay.csv", result.tensors)
    serialize.write_trajectory_csv(
        outdir / "training_trajectory.csv", result.trajectories[0]
    )
    for w in result.warnings:
        click.echo(f"warning: {w}", err=True)
    if figures:
        times = result.tensors.dt * np.arange(1, len(result.tensors) + 1)
        plots.norm_decay_figure(outdir / "norm_decay.png", times, result.tensors.norms)
    write_manifest(
        outdir, "learn", cfg,
        {"total": wall},
        extra={"K": result.tensors.cutoff, "decayed": result.tensors.decayed},
    )
    click.echo(f"learn: {learn_steps} steps, K = {result.tensors.cutoff}")


def _run_learning(model, ecfg, prep, learn_steps, threshold, threads=1):
    preps = ttm.physical_preparations(model.d_sys)

    def one(rho0):
        state, lattice = prep(rho0)
        return tns.evolve(state, lattice, ecfg, learn_steps)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, preps))
    else:
        results = [one(p) for p in preps]
    trajectories = [r[0] for r in results]
    reports = [r[1] for r in results]
    maps = ttm.maps_from_trajectories(preps, [t.rhos for t in trajectories], ecfg.dt)
    tensors = ttm.tensors_from_maps(maps, threshold=threshold)
    warns = [w for r in reports for w in r.warnings]
    if not tensors.decayed:
        warns.append(
            "transfer tensors have not decayed below the threshold within "
            "the learning window"
        )
    return models.PipelineResult(
        config=ecfg, preparations=preps, trajectories=trajectories, maps=maps,
        tensors=tensors, cutoff=tensors.cutoff, reports=reports, warnings=warns,
    )


@main.command("propagate")
@common_options
@click.option("--tensors", "tensors_path", required=True, type=click.Path(exists=True))
@click.option("--trajectory", "traj_path", required=True, type=click.Path(exists=True))
@click.option("--steps", default=1000, show_default=True)
def propagate_cmd(config_path, outdir, threads, figures, tensors_path, traj_path, steps):
    """Extend a trajectory by transfer-tensor propagation."""
    cfg = load_config(config_path)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tensors = ttm.load_tensors(tensors_path)
    cutoff = cfg.get("ttm", {}).get("K_override", tensors.cutoff)
    training = serialize.read_trajectory_csv(traj_path)
    t0 = time.perf_counter()
    extended = models.continue_trajectory(tensors, cutoff, training, steps)
    wall = time.perf_counter() - t0
    serialize.write_trajectory_csv(outdir / "propagated.csv", extended)
    if figures:
        plots.population_figure(
            outdir / "propagated.png",
            extended.times,
            extended.rhos,
            learn_time=training.times[-1],
        )
    write_manifest(outdir, "propagate", cfg, {"total": wall})
    click.echo(f"propagate: extended by {steps} steps with K = {cutoff}")


@main.command("spectrum")
@common_options
@click.option("--steps", "total_steps", default=2000, show_default=True)
@click.option("--window", default="hann", type=click.Choice(["hann", "rect"]))
def spectrum_cmd(config_path, outdir, threads, figures, total_steps, window):
    """Dimer absorption spectrum via the learned maps."""
    cfg = load_config(config_path)
    if cfg.get("model", {}).get("type") != "dimer":
        raise click.ClickException("spectrum requires a dimer model")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tt = cfg.get("ttm", {})
    learn_steps = tt.get("learn_steps", cfg["tebd"].get("steps", 100))
    model, ecfg, chain, prep = _build_run(cfg)
    t0 = time.perf_counter()
    result = _run_learning(model, ecfg, prep, learn_steps, tt.get("threshold", 1e-7), threads)
    corr = models.dipole_correlation(model, result.maps, result.tensors, total_steps)
    spec = models.absorption_spectrum(corr, ecfg.dt, window=window)
    wall = time.perf_counter() - t0
    serialize.write_spectrum_csv(outdir / "spectrum.csv", spec)
    for w in result.warnings:
        click.echo(f"warning: {w}", err=True)
    if figures:
        plots.spectrum_figure(outdir / "spectrum.png", spec.omega, spec.absorption)
    write_manifest(outdir, "spectrum", cfg, {"total": wall})
    click.echo(f"spectrum: {total_steps} correlation steps, window {window}")


def fit_scaling(t_bath, wall_times, prop_steps=None, prop_walls=None):
    """Quadratic learning-cost fit and linear propagation-cost fit.

    Returns a dict with the quadratic constant c (s * eps^2), R^2 of the
    t_w = c t_bath^2 model, a residual-structure flag, and the propagation
    slope (s per step) when propagation timings are supplied.
    """
    t_bath = np.asarray(t_bath, dtype=float)
    wall = np.asarray(wall_times, dtype=float)
    if t_bath.size < 4:
        raise ValueError("need at least 4 bench grid points")
    if np.unique(t_bath).size < t_bath.size:
        raise ValueError("degenerate bench grid")
    x = t_bath**2
    c = float((x @ wall) / (x @ x))
    resid = wall - c * x
    ss_res = float(resid @ resid)
    ss_tot = float(((wall - wall.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    structured = False
    if resid.std() > 0 and t_bath.std() > 0:
        corr = float(np.corrcoef(t_bath, resid)[0, 1])
        structured = abs(corr) > 0.5
    out = {"c": c, "r_squared": r2, "residual_structured": structured}
    if prop_steps is not None:
        ps = np.asarray(prop_steps, dtype=float)
        pw = np.asarray(prop_walls, dtype=float)
        slope, intercept = np.polyfit(ps, pw, 1)
        out["propagation_slope_s_per_step"] = float(slope)
        out["propagation_intercept_s"] = float(intercept)
    return out


@main.command("bench")
@common_options
def bench_cmd(config_path, outdir, threads, figures):
    """Wall-time scaling study over a grid of bath coherence times."""
    cfg = load_config(config_path)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    bench = cfg.get("bench", {})
    grid = bench.get("t_bath", [2.5, 5.0, 7.5, 10.0])
    reps = bench.get("repetitions", 1)
    sites_per_time = bench.get("sites_per_time", 2.0)
    prop_total = bench.get("propagate_steps", 2000)
    model = build_model(cfg)
    density = build_density(cfg)
    te = cfg["tebd"]
    records = []
    tensors_for_prop = None
    for t_bath in grid:
        n_sites = max(2, math.ceil(sites_per_time * t_bath))
        steps = max(2, round(t_bath / te["dt"]))
        coeff = spectral.recurrence_coefficients(density, n_sites)
        chain = spectral.chain_hamiltonian(coeff)
        ecfg = tns.EvolutionConfig(
            n_chain=n_sites, d=cfg["chain"]["d"], d_sys=model.d_sys,
            chi=te["chi"], dt=te["dt"], e0=te.get("e0", 1e-10),
            beta=model_beta(cfg),
        )
        lattice = models.spin_boson_lattice(model, chain, ecfg.d)
        best = math.inf
        for _ in range(reps):
            state = models.monomer_initial_state(ecfg, _default_rho0(model), chain)
            t0 = time.perf_counter()
            traj, _ = tns.evolve(state, lattice, ecfg, steps, leak_check_every=0)
            best = min(best, time.perf_counter() - t0)
        records.append({"t_bath": t_bath, "N": n_sites, "steps": steps, "wall_s": best})
    # propagation timing on the largest grid point
    result = None
    t_bath = grid[-1]
    n_sites = max(2, math.ceil(sites_per_time * t_bath))
    coeff = spectral.recurrence_coefficients(density, n_sites)
    chain = spectral.chain_hamiltonian(coeff)
    ecfg = tns.EvolutionConfig(
        n_chain=n_sites, d=cfg["chain"]["d"], d_sys=model.d_sys,
        chi=te["chi"], dt=te["dt"], e0=te.get("e0", 1e-10), beta=model_beta(cfg),
    )

    def prep(rho0):
        lattice = models.spin_boson_lattice(model, chain, ecfg.d)
        return models.monomer_initial_state(ecfg, rho0, chain), lattice

    learn_steps = max(2, round(t_bath / te["dt"]))
    result = _run_learning(model, ecfg, prep, learn_steps, 1e-7, threads)
    prop_steps = []
    prop_walls = []
    for n_prop in (prop_total // 4, prop_total // 2, prop_total):
        t0 = time.perf_counter()
        models.continue_trajectory(
            result.tensors, result.tensors.cutoff, result.trajectories[0], n_prop
        )
        prop_walls.append(time.perf_counter() - t0)
        prop_steps.append(n_prop)
    fit = fit_scaling(
        [r["t_bath"] for r in records],
        [r["wall_s"] for r in records],
        prop_steps,
        prop_walls,
    )
    with open(outdir / "bench.csv", "w") as fh:
        fh.write("t_bath,N,steps,wall_s\n")
        for r in records:
            fh.write(f"{r['t_bath']},{r['N']},{r['steps']},{r['wall_s']:.6f}\n")
    serialize.write_json(outdir / "bench_fit.json", fit)
    if figures:
        plots.bench_figure(
            outdir / "bench.png",
            [r["t_bath"] for r in records],
            [r["wall_s"] for r in records],
            fit["c"],
        )
    write_manifest(outdir, "bench", cfg, {"total": sum(r["wall_s"] for r in records)})
    click.echo(
        f"bench: c = {fit['c']:.4g} s*eps^2, R^2 = {fit['r_squared']:.4f}"
    )


if __name__ == "__main__":
    main()
