"""Particle-to-PDE comparison on the Euler scale.

A ring of ``L`` sites is started from a product measure whose parameters
follow a smooth macroscopic profile; block averages of ``n`` and ``z`` at
time ``t`` are compared with the finite-volume solution of the
hydrodynamic system at macroscopic time ``t / L`` on ``x in [0, 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bricklayer.gibbs import z_cutoff
from .bricklayer.rates import RateFunction
from .bricklayer.simulate import simulate
from .bricklayer.state import BrickState
from .hydroflux import HydroFlux, ThermoTable, fug_from_macro
from .solvers import Field1D, GridSpec, SchemeConfig, evolve


def default_rho(x):
    return 1.0 + 0.5 * np.sin(2 * np.pi * x)


def default_u(x):
    return 0.5 * np.sin(2 * np.pi * x)


def local_gibbs_state(rho_fn, u_fn, L: int, table: ThermoTable, rng) -> BrickState:
    """Independent sites, site ``j`` drawn from the equilibrium law matching
    ``(rho, u)`` at ``x_j = (j + 1/2) / L``."""
    rng = np.random.default_rng(rng)
    x = (np.arange(L) + 0.5) / L
    lam, th = fug_from_macro((rho_fn(x), u_fn(x)), table)
    k = z_cutoff(np.log(th), table.beta, 1e-17, power=0)
    zs = np.arange(-k, k + 1)
    logw = np.log(th)[:, None] * zs - 0.5 * table.beta * zs * zs
    p = np.exp(logw - logw.max(axis=1, keepdims=True))
    cdf = np.cumsum(p, axis=1)
    cdf /= cdf[:, -1:]
    n = np.empty(L, dtype=np.int64)
    z = np.empty(L, dtype=np.int64)
    todo = np.arange(L)
    while todo.size:
        nn = rng.poisson(lam[todo])
        idx = np.minimum((cdf[todo] < rng.random(todo.size)[:, None]).sum(axis=1), zs.size - 1)
        zz = zs[idx]
        ok = (nn + zz) % 2 == table.parity
        n[todo[ok]] = nn[ok]
        z[todo[ok]] = zz[ok]
        todo = todo[~ok]
    return BrickState.from_arrays(n, z, heights=False)


def block_average(a: np.ndarray, block: int) -> np.ndarray:
    return a.reshape(-1, block).mean(axis=1)


def relative_l1(approx: np.ndarray, ref: np.ndarray) -> float:
    return float(np.sum(np.abs(approx - ref)) / np.sum(np.abs(ref)))


@dataclass
class BridgeResult:
    x: np.ndarray
    rho_mc: np.ndarray
    u_mc: np.ndarray
    rho_fv: np.ndarray
    u_fv: np.ndarray
    rho_0: np.ndarray
    u_0: np.ndarray
    events: int

    @property
    def error(self) -> tuple[float, float]:
        """Relative L1 errors of the particle averages against the PDE solution."""
        return relative_l1(self.rho_mc, self.rho_fv), relative_l1(self.u_mc, self.u_fv)

    @property
    def frozen_error(self) -> tuple[float, float]:
        """Same errors against the unevolved profile, as a yardstick."""
        return relative_l1(self.rho_mc, self.rho_0), relative_l1(self.u_mc, self.u_0)


def hydrodynamic_bridge(L: int = 4096, t_end: float = 200.0, replicas: int = 128, block: int = 128,
                        parity: int = 0, beta: float = 1.0, fv_cells: int = 1024, seed: int = 0,
                        rho_fn=default_rho, u_fn=default_u) -> BridgeResult:
    """Run the particle ensemble and the finite-volume solution side by side."""
    if L % block or fv_cells % (L // block):
        raise ValueError("block must divide L and the block count must divide fv_cells")
    table = ThermoTable(parity, beta)
    rf = RateFunction(beta)
    seeds = np.random.SeedSequence(seed).spawn(2 * replicas)
    n_sum = np.zeros(L)
    z_sum = np.zeros(L)
    events = 0
    for r in range(replicas):
        st = local_gibbs_state(rho_fn, u_fn, L, table, np.random.default_rng(seeds[2 * r]))
        res = simulate(st, rf, t_end, rng=np.random.default_rng(seeds[2 * r + 1]), fields=("n", "z"))
        n_sum += res.n[-1]
        z_sum += res.z[-1]
        events += res.events
    rho_mc = block_average(n_sum / replicas, block)
    u_mc = block_average(z_sum / replicas, block)

    model = HydroFlux.regular(rho_range=(0.05, 3.0), u_range=(-2.0, 2.0), shape=(241, 241), table=table)
    grid = GridSpec.uniform(0.0, 1.0, fv_cells, "periodic")
    # cell averages of the initial profile by 8-point midpoint quadrature
    sub = (np.arange(8) + 0.5) / 8
    xs = grid.x_min + (np.arange(fv_cells)[:, None] + sub) * grid.dx
    f0 = Field1D(grid, rho_fn(xs).mean(axis=1), u_fn(xs).mean(axis=1))
    traj = evolve(f0, SchemeConfig("hll"), t_end / L, model=model, diagnostics=False)
    nb = L // block
    fin = traj.final
    return BridgeResult(
        x=(np.arange(nb) + 0.5) / nb,
        rho_mc=rho_mc, u_mc=u_mc,
        rho_fv=block_average(fin.rho, fv_cells // nb), u_fv=block_average(fin.u, fv_cells // nb),
        rho_0=block_average(f0.rho, fv_cells // nb), u_0=block_average(f0.u, fv_cells // nb),
        events=events,
    )
