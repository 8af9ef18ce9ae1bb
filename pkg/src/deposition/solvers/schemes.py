"""Viscous and inviscid one-step updates.

Cells carry ``v = (rho, u)``.  All updates are in conservation form, so
with periodic boundaries the cell sums of ``rho`` and ``u`` change only by
rounding.
"""
from __future__ import annotations

import enum

import numpy as np

from ..characteristics import char_speeds
from ..errors import CflViolation, NonHyperbolicCell, NonPhysicalState
from .grid import Field1D, GridSpec

DEFAULT_CFL = 0.45
POSITIVITY_FLOOR = -1e-10


class Scheme(str, enum.Enum):
    LaxFriedrichs = "lax-friedrichs"
    HLL = "hll"


def flux(rho, u):
    """Physical flux ``(rho u, rho)``."""
    rho = np.asarray(rho, float)
    u = np.asarray(u, float)
    j1 = rho * u
    j2 = rho + 0.0 * u
    if j1.ndim == 0:
        return float(j1), float(j2)
    return j1, j2


class DepositionFlux:
    """Flux model of the target system, with exact characteristic speeds."""

    name = "deposition"

    def flux(self, rho, u):
        return rho * u, rho.copy()

    def speeds(self, rho, u):
        lam, mu = char_speeds(np.maximum(rho, 0.0), u)
        return mu, lam

    def check(self, rho, u):
        if np.any(rho < POSITIVITY_FLOOR):
            j = int(np.argmin(rho))
            raise NonPhysicalState(f"rho = {rho[j]:.3e} < 0 at cell {j}")
        if np.any(u * u + 4.0 * rho < -1e-12):
            raise NonHyperbolicCell("a cell left the hyperbolic domain")


DEPOSITION = DepositionFlux()


def max_speed(f: Field1D, model=DEPOSITION) -> float:
    smin, smax = model.speeds(f.rho, f.u)
    return float(max(np.max(np.abs(smin)), np.max(np.abs(smax))))


def stable_dt(f: Field1D, eps: float = 0.0, cfl: float = DEFAULT_CFL, model=DEPOSITION) -> float:
    """Largest step allowed by ``cfl dx / max_speed`` and ``0.5 dx^2 / eps``."""
    dx = f.grid.dx
    bound = np.inf
    s = max_speed(f, model)
    if s > 0:
        bound = cfl * dx / s
    if eps > 0:
        bound = min(bound, 0.5 * dx * dx / eps)
    return bound


def _check_dt(f, dt, eps, cfl, model):
    if not dt > 0:
        raise CflViolation("dt must be positive")
    bound = stable_dt(f, eps, cfl, model)
    if dt > bound * (1.0 + 1e-12):
        raise CflViolation(f"dt = {dt:.6g} exceeds the stable bound {bound:.6g}")


def _pad(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """One ghost cell per side: periodic wrap or zero-gradient copy."""
    out = np.empty(a.size + 2)
    out[1:-1] = a
    if grid.periodic:
        out[0], out[-1] = a[-1], a[0]
    else:
        out[0], out[-1] = a[0], a[-1]
    return out


def hll_face_flux(rl, ul, rr, ur, model=DEPOSITION):
    """HLL flux at faces with wave bounds from both neighbours' characteristic speeds."""
    fl1, fl2 = model.flux(rl, ul)
    fr1, fr2 = model.flux(rr, ur)
    sminl, smaxl = model.speeds(rl, ul)
    sminr, smaxr = model.speeds(rr, ur)
    sl = np.minimum(np.minimum(sminl, sminr), 0.0)
    sr = np.maximum(np.maximum(smaxl, smaxr), 0.0)
    width = sr - sl
    safe = np.where(width > 0, width, 1.0)
    g1 = (sr * fl1 - sl * fr1 + sl * sr * (rr - rl)) / safe
    g2 = (sr * fl2 - sl * fr2 + sl * sr * (ur - ul)) / safe
    g1 = np.where(width > 0, g1, fl1)
    g2 = np.where(width > 0, g2, fl2)
    return g1, g2


def _hll_rate(rho, u, grid, model):
    rp = _pad(rho, grid)
    up = _pad(u, grid)
    g1, g2 = hll_face_flux(rp[:-1], up[:-1], rp[1:], up[1:], model)
    return -np.diff(g1) / grid.dx, -np.diff(g2) / grid.dx


def _viscous_rate(rho, u, grid, eps, model):
    rp = _pad(rho, grid)
    up = _pad(u, grid)
    f1, f2 = model.flux(rp, up)
    dx = grid.dx
    # face flux = centred average minus viscous flux, so the update telescopes
    g1 = 0.5 * (f1[:-1] + f1[1:]) - eps * (rp[1:] - rp[:-1]) / dx
    g2 = 0.5 * (f2[:-1] + f2[1:]) - eps * (up[1:] - up[:-1]) / dx
    return -np.diff(g1) / dx, -np.diff(g2) / dx


def _heun(f, dt, rate, model):
    k1r, k1u = rate(f.rho, f.u)
    r1 = f.rho + dt * k1r
    u1 = f.u + dt * k1u
    k2r, k2u = rate(r1, u1)
    rho = 0.5 * (f.rho + r1 + dt * k2r)
    u = 0.5 * (f.u + u1 + dt * k2u)
    model.check(rho, u)
    return Field1D(f.grid, rho, u, f.time + dt)


def step_viscous(f: Field1D, eps: float, dt: float, cfl: float = DEFAULT_CFL,
                 model=DEPOSITION) -> Field1D:
    """One two-stage step of ``v_t + J(v)_x = eps v_xx``.

    Centred flux differences plus the ``eps`` second difference.  The scheme
    is non-oscillatory only while the cell Peclet number
    ``max_speed dx / eps`` stays below 2.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    _check_dt(f, dt, eps, cfl, model)
    return _heun(f, dt, lambda r, v: _viscous_rate(r, v, f.grid, eps, model), model)


def step_inviscid(f: Field1D, scheme, dt: float, cfl: float = DEFAULT_CFL,
                  model=DEPOSITION) -> Field1D:
    """One conservative inviscid step.

    Lax-Friedrichs uses forward Euler with the classical flux
    ``(F_j + F_j+1)/2 - dx/(2 dt) (v_j+1 - v_j)``; HLL is first order in
    space with a two-stage Heun step.
    """
    scheme = Scheme(scheme)
    _check_dt(f, dt, 0.0, cfl, model)
    grid = f.grid
    if scheme is Scheme.HLL:
        return _heun(f, dt, lambda r, v: _hll_rate(r, v, grid, model), model)
    rp = _pad(f.rho, grid)
    up = _pad(f.u, grid)
    f1, f2 = model.flux(rp, up)
    c = grid.dx / (2.0 * dt)
    g1 = 0.5 * (f1[:-1] + f1[1:]) - c * (rp[1:] - rp[:-1])
    g2 = 0.5 * (f2[:-1] + f2[1:]) - c * (up[1:] - up[:-1])
    rho = f.rho - dt / grid.dx * np.diff(g1)
    u = f.u - dt / grid.dx * np.diff(g2)
    model.check(rho, u)
    return Field1D(grid, rho, u, f.time + dt)
