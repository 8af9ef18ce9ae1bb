"""Command-line front end: ``deposition <command> [--config FILE] [--seed N] [--out DIR]``.

Exit codes: 0 success, 2 invalid configuration (including CFL violations),
3 numerical-domain violation, 4 non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import (BricklayerConfig, ConvergenceConfig, EntropyScanConfig, EvolveConfig,
                     HydroTableConfig, RiemannConfig, canonical_json, config_hash, load_config)
from .errors import CflViolation, ConvergenceError, DomainError, FrozenState

log = logging.getLogger("deposition")

OUT_ENV = "DEPOSITION_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_CONVERGENCE = 0, 2, 3, 4


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(out: Path, command: str, cfg, files) -> Path:
    return write_json(out / "manifest.json", {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": json.loads(canonical_json(cfg)),
        "config_hash": config_hash(cfg),
        "outputs": sorted(p.name for p in files),
    })


def ordered_map(fn, items, workers: int):
    """``map`` over a thread pool; results come back in input order."""
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# riemann
# ---------------------------------------------------------------------------

def cmd_riemann(cfg: RiemannConfig, out: Path | None) -> dict:
    from .shocks import classify_discontinuity, right_state_from_speed, rh_speed, shock_speeds

    left = tuple(cfg.left)
    if cfg.sigma is not None:
        sigma = cfg.sigma
        right = tuple(right_state_from_speed(left, sigma))
    else:
        right = tuple(cfg.right)
        sigma = rh_speed(left, right)
    candidates = shock_speeds(left, right)
    cls = classify_discontinuity(left, right, sigma)
    report = {"left": list(left), "right": list(right), "sigma": sigma,
              "sigma_candidates": list(candidates), "classification": cls.value}
    print(f"left            = ({left[0]:.6g}, {left[1]:.6g})")
    print(f"right           = ({right[0]:.6g}, {right[1]:.6g})")
    print(f"sigma           = {sigma:.6g}")
    print(f"candidates      = ({candidates[0]:.6g}, {candidates[1]:.6g})")
    print(f"classification  = {cls.value}")
    if cfg.run:
        from .solvers import Field1D, GridSpec, SchemeConfig, evolve, measure_shock_speed

        grid = GridSpec.uniform(-cfg.half_width, cfg.half_width, cfg.cells, "outflow")
        f0 = Field1D.riemann(grid, left, right, 0.0)
        times = np.linspace(0.0, cfg.t_end, 13)[1:-1]
        traj = evolve(f0, SchemeConfig(cfg.scheme), cfg.t_end, snapshot_times=times, diagnostics=False)
        measured = measure_shock_speed(traj, skip=2)
        report["measured_speed"] = measured
        report["relative_error"] = abs(measured - sigma) / abs(sigma)
        print(f"measured speed  = {measured:.6g} (relative error {report['relative_error']:.2e})")
    if out is not None:
        files = [write_json(out / "riemann.json", report)]
        write_manifest(out, "riemann", cfg, files)
    return report


# ---------------------------------------------------------------------------
# evolve / convergence
# ---------------------------------------------------------------------------

def build_grid(g):
    from .solvers import GridSpec

    return GridSpec.uniform(g.x_min, g.x_max, g.n_cells, g.boundary)


def build_initial(grid, init):
    from .solvers import Field1D

    kind = init.type
    if kind == "constant":
        return Field1D.from_functions(grid, init.rho, init.u)
    if kind == "riemann":
        return Field1D.riemann(grid, init.left, init.right, init.x0)
    x = grid.centers
    if kind == "bump":
        shape = np.exp(-0.5 * ((x - init.center) / init.width) ** 2)
        rho = init.base[0] + init.amplitude[0] * shape
        u = init.base[1] + init.amplitude[1] * shape
    elif kind == "sine":
        arg = 2 * np.pi * init.wavenumber * (x - grid.x_min) / grid.length + init.phase
        rho = init.base[0] + init.amplitude[0] * np.sin(arg)
        u = init.base[1] + init.amplitude[1] * np.sin(arg)
    else:
        rho = np.interp(x, init.x, init.rho)
        u = np.interp(x, init.x, init.u)
    if np.any(rho < 0):
        raise ValueError("initial density must be non-negative")
    return Field1D(grid, rho, u)


def _scheme(spec):
    from .solvers import SchemeConfig

    return SchemeConfig(spec.kind, spec.eps, spec.cfl, spec.dt)


def cmd_evolve(cfg: EvolveConfig, out: Path) -> dict:
    from .characteristics import riemann_w, riemann_z
    from .solvers import SchemeConfig, evolve, l1_distance, measure_shock_speed

    grid = build_grid(cfg.grid)
    f0 = build_initial(grid, cfg.initial)
    times = np.linspace(0.0, cfg.t_end, cfg.snapshots + 1)[1:-1]
    traj = evolve(f0, _scheme(cfg.scheme), cfg.t_end, snapshot_times=times)
    files = []
    x = grid.centers
    def rows():
        for f in traj.fields:
            rho = np.maximum(f.rho, 0.0)
            yield from zip(np.full(x.size, f.time), x, f.rho, f.u, riemann_w(rho, f.u), riemann_z(rho, f.u))

    files.append(write_csv(out / "snapshots.csv", ["t", "x", "rho", "u", "w", "z"], rows()))
    first = ["sup_w", "sup_z", "mass", "total_u", "entropy_integral"]
    keys = first + sorted(set(traj.diagnostics) - set(first))
    files.append(write_csv(out / "diagnostics.csv", ["t"] + keys,
                           zip(traj.times, *(traj.diagnostics[k] for k in keys))))
    sw, sz = traj.series("sup_w"), traj.series("sup_z")
    summary = {
        "steps": traj.steps,
        "snapshots": len(traj),
        "max_increase_sup_w": float(np.max(np.diff(sw))) if sw.size > 1 else 0.0,
        "max_increase_sup_z": float(np.max(np.diff(sz))) if sz.size > 1 else 0.0,
        "min_rho": float(np.min(traj.series("min_rho"))),
        "mass_drift": float(traj.series("mass")[-1] - traj.series("mass")[0]),
    }
    if cfg.measure_speed:
        summary["measured_speed"] = measure_shock_speed(traj, skip=min(2, len(traj) - 2))
        if cfg.initial.type == "riemann":
            from .shocks import rh_speed

            sigma = rh_speed(cfg.initial.left, cfg.initial.right)
            summary["rh_speed"] = sigma
            summary["relative_error"] = abs(summary["measured_speed"] - sigma) / abs(sigma)
    if cfg.eps_sweep:
        def one(eps):
            return evolve(f0, SchemeConfig("viscous", eps, cfg.scheme.cfl), cfg.t_end, diagnostics=False).final

        finals = ordered_map(one, cfg.eps_sweep, cfg.workers)
        d = [l1_distance(a, b) for a, b in zip(finals, finals[1:])]
        files.append(write_csv(out / "sweep.csv", ["eps", "eps_next", "l1_distance"],
                               zip(cfg.eps_sweep, cfg.eps_sweep[1:], d)))
        summary["sweep_l1"] = d
        summary["sweep_monotone"] = bool(all(b < a for a, b in zip(d, d[1:])))
    files.append(write_json(out / "summary.json", summary))
    write_manifest(out, "evolve", cfg, files)
    return summary


def cmd_convergence(cfg: ConvergenceConfig, out: Path) -> dict:
    from .solvers import Field1D, SchemeConfig, evolve, l1_distance

    grid = build_grid(cfg.grid)
    f0 = Field1D.riemann(grid, cfg.left, cfg.right, cfg.x0)

    def one(eps):
        return evolve(f0, SchemeConfig("viscous", eps, cfg.cfl), cfg.t_end, diagnostics=False).final

    finals = ordered_map(one, cfg.eps, cfg.workers)
    d = [l1_distance(a, b) for a, b in zip(finals, finals[1:])]
    files = [write_csv(out / "convergence.csv", ["eps", "eps_next", "l1_distance"],
                       zip(cfg.eps, cfg.eps[1:], d))]
    summary = {"l1_distance": d, "monotone": bool(all(b < a for a, b in zip(d, d[1:])))}
    files.append(write_json(out / "summary.json", summary))
    write_manifest(out, "convergence", cfg, files)
    return summary


# ---------------------------------------------------------------------------
# bricklayer
# ---------------------------------------------------------------------------

def cmd_bricklayer(cfg: BricklayerConfig, out: Path) -> dict:
    from .bricklayer import (BrickState, GibbsParams, RateFunction, empirical_marginal,
                             estimate_flux, sample_gibbs, sample_sites, simulate, total_variation)

    rf = RateFunction(cfg.beta)
    gp = GibbsParams(cfg.gibbs.fugacity, cfg.gibbs.tilt, cfg.gibbs.parity, cfg.beta)
    root = np.random.SeedSequence(cfg.seed)
    files = []
    summary: dict = {"mode": cfg.mode}

    if cfg.mode == "run":
        init_seed, run_seed = root.spawn(2)
        if cfg.initial == "empty":
            st = BrickState.uniform(cfg.L)
        else:
            st = sample_gibbs(gp, cfg.L, np.random.default_rng(init_seed))
        if not np.any(st.n > 0):
            raise FrozenState("the lattice is empty: no jump can ever occur")
        before = st.invariants()
        times = np.linspace(0.0, cfg.t_end, cfg.record + 1)
        res = simulate(st, rf, cfg.t_end, record_times=times, rng=np.random.default_rng(run_seed))
        files.append(write_csv(out / "observables.csv", ["t", "site", "n", "z", "h"],
                               ((t, j, n[j], z[j], h[j]) for t, n, z, h in zip(res.times, res.n, res.z, res.h)
                                for j in range(cfg.L))))
        fp, fm = res.time_averaged_flux()
        summary.update(events=res.events, conserved=res.final.invariants() == before,
                       time_averaged_flux_plus=fp, time_averaged_flux_minus=fm,
                       height_growth_rate=res.height_growth_rate())
    elif cfg.mode == "stationarity":
        reps = math.ceil(cfg.samples / cfg.L)
        seeds = root.spawn(2 * reps + 1)

        def one(r):
            st = sample_gibbs(gp, cfg.L, np.random.default_rng(seeds[2 * r]))
            before = st.invariants()
            res = simulate(st, rf, cfg.t_end, rng=np.random.default_rng(seeds[2 * r + 1]), fields=("n", "z"))
            return res.final.n, res.final.z, res.final.invariants() == before

        runs = [one(r) for r in range(reps)]
        n = np.concatenate([r[0] for r in runs])
        z = np.concatenate([r[1] for r in runs])
        n_ref, z_ref = sample_sites(gp, n.size, np.random.default_rng(seeds[-1]))
        tv = total_variation(empirical_marginal(n, z), empirical_marginal(n_ref, z_ref))
        conserved = all(r[2] for r in runs)
        files.append(write_csv(out / "stationarity.csv",
                               ["L", "t_end", "site_samples", "tv_distance", "conserved"],
                               [(cfg.L, cfg.t_end, n.size, tv, conserved)]))
        summary.update(tv_distance=tv, site_samples=int(n.size), conserved=conserved)
    else:
        seeds = root.spawn(2 * cfg.replicas)
        finals = []
        for r in range(cfg.replicas):
            st = sample_gibbs(gp, cfg.L, np.random.default_rng(seeds[2 * r]))
            res = simulate(st, rf, cfg.t_end, rng=np.random.default_rng(seeds[2 * r + 1]), fields=("n", "z"))
            finals.append(res.final)
        est = estimate_flux(finals, rf)
        files.append(write_csv(out / "flux.csv",
                               ["lambda", "theta", "beta", "flux_plus", "flux_plus_se",
                                "flux_minus", "flux_minus_se"],
                               [(gp.fugacity, gp.tilt, cfg.beta, est.flux_plus, est.flux_plus_se,
                                 est.flux_minus, est.flux_minus_se)]))
        summary.update(est._asdict(), expected_plus=gp.fugacity * gp.tilt,
                       expected_minus=gp.fugacity / gp.tilt)
    files.append(write_json(out / "summary.json", summary))
    write_manifest(out, "bricklayer", cfg, files)
    return summary


# ---------------------------------------------------------------------------
# hydro-table / entropy-scan
# ---------------------------------------------------------------------------

def _values(spec):
    if isinstance(spec, list):
        return np.asarray(spec, float)
    return np.linspace(spec.start, spec.stop, spec.num)


def cmd_hydro_table(cfg: HydroTableConfig, out: Path) -> dict:
    from .hydroflux import ThermoTable, hydro_table

    rows = hydro_table(_values(cfg.fugacity), _values(cfg.tilt), ThermoTable(cfg.parity, cfg.beta))
    cols = ["lambda", "theta", "rho", "u", "J_rho", "J_u"]
    files = [write_csv(out / "hydro_table.csv", cols, ([r[c] for c in cols] for r in rows))]
    write_manifest(out, "hydro-table", cfg, files)
    return {"rows": len(rows)}


def cmd_entropy_scan(cfg: EntropyScanConfig, out: Path) -> dict:
    from .entropy import (canonical_pair, entropy_residual, flux_equation_residual,
                          similarity_to_pair, solve_similarity_ode)

    rng = np.random.default_rng(cfg.seed)
    files = []
    summary: dict = {"pair": cfg.pair}
    if cfg.pair == "canonical":
        pair = canonical_pair()
        rho = rng.uniform(*cfg.rho_range, cfg.samples)
        u = rng.uniform(*cfg.u_range, cfg.samples)
    else:
        se = solve_similarity_ode(cfg.alpha, cfg.phi0, cfg.dphi0, cfg.y_range, cfg.step)
        files.append(write_csv(out / "similarity.csv", ["y", "phi", "phi_prime", "ode_residual"],
                               zip(se.y, se.phi, se.phi_prime, se.ode_residual)))
        pair = similarity_to_pair(se)
        rho = rng.uniform(*cfg.rho_range, cfg.samples)
        u = rng.uniform(se.y_min, se.y_max, cfg.samples) * np.sqrt(rho)
        summary["max_ode_residual"] = float(np.nanmax(np.abs(se.ode_residual)))
        summary["convex"] = pair.convex
    r1, r2 = flux_equation_residual(pair, rho, u)
    eq = np.maximum(np.abs(r1), np.abs(r2))
    second = np.abs(entropy_residual(pair, rho, u, relative=True))
    files.append(write_csv(out / "pair.csv", ["rho", "u", "S", "F", "eq_residual", "entropy_residual"],
                           zip(rho, u, pair.S(rho, u), pair.F(rho, u), eq, second)))
    summary["max_eq_residual"] = float(np.max(eq))
    summary["max_entropy_residual"] = float(np.max(second))
    files.append(write_json(out / "summary.json", summary))
    write_manifest(out, "entropy-scan", cfg, files)
    return summary


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _state(text: str):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'rho,u', got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deposition", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON scenario file")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./out)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("riemann", parents=[common], help="complete, classify and optionally simulate a jump")
    r.add_argument("--left", type=_state)
    g = r.add_mutually_exclusive_group()
    g.add_argument("--right", type=_state)
    g.add_argument("--sigma", type=float)
    r.add_argument("--run", action="store_true", help="solve the Riemann problem and measure the speed")
    r.add_argument("--cells", type=int)
    r.add_argument("--t-end", type=float)
    r.add_argument("--scheme", choices=["hll", "lax-friedrichs"])

    for name, text in (("evolve", "finite-volume or viscous evolution"),
                       ("bricklayer", "particle simulation, stationarity and flux checks"),
                       ("hydro-table", "equilibrium (lambda, theta) -> (rho, u, J) table"),
                       ("entropy-scan", "entropy pair and similarity ODE residual scan"),
                       ("convergence", "vanishing-viscosity L1 table")):
        sub.add_parser(name, parents=[common], help=text)
    return p


def _riemann_config(args):
    data = json.loads(args.config.read_text()) if args.config else {}
    data.setdefault("kind", "riemann")
    for key, val in (("left", args.left), ("right", args.right), ("sigma", args.sigma),
                     ("cells", args.cells), ("t_end", args.t_end), ("scheme", args.scheme)):
        if val is not None:
            data[key] = val
    if args.sigma is not None:
        data.pop("right", None)
    if args.right is not None:
        data.pop("sigma", None)
    if args.run:
        data["run"] = True
    if args.seed is not None:
        data["seed"] = args.seed
    return RiemannConfig.model_validate(data)


COMMANDS = {
    "evolve": cmd_evolve,
    "convergence": cmd_convergence,
    "bricklayer": cmd_bricklayer,
    "hydro-table": cmd_hydro_table,
    "entropy-scan": cmd_entropy_scan,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.out or Path(os.environ.get(OUT_ENV, "out"))
    try:
        if args.command == "riemann":
            cfg = _riemann_config(args)
            if args.out is not None or args.config is not None:
                out.mkdir(parents=True, exist_ok=True)
                cmd_riemann(cfg, out)
            else:
                cmd_riemann(cfg, None)
            return EXIT_OK
        text = args.config.read_text() if args.config else None
        cfg = load_config(args.command, text, args.seed)
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg, out)
        print(json.dumps(result, sort_keys=True, default=float))
        return EXIT_OK
    except CflViolation as e:
        print(f"error: CflViolation: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValidationError, ValueError, OSError) as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
