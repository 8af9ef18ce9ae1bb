"""Macroscopic fluxes of the bricklayer's Euler-scale hydrodynamics.

In equilibrium ``rho = lambda d log Z / d lambda`` and ``u = theta d log Z / d theta``;
the fluxes are ``J_rho = lambda (theta - 1/theta)`` and ``J_u = lambda (theta + 1/theta)``.
Working in ``a = log lambda``, ``b = log theta`` the map ``(a, b) -> (rho, u)``
is the gradient of the convex function ``log Z`` with Hessian ``Cov(n, z)``,
which makes the inversion a well-posed convex minimisation.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import LinearNDInterpolator, RegularGridInterpolator

from .bricklayer.gibbs import DEFAULT_TOL, partition_moments, z_cutoff
from .errors import NewtonDiverged, OutOfRange
from .solvers.schemes import POSITIVITY_FLOOR
from .errors import NonPhysicalState


class MacroState(NamedTuple):
    rho: float
    u: float

    def mirror(self) -> "MacroState":
        return MacroState(self.rho, -self.u)


@dataclass(frozen=True)
class ThermoTable:
    """Partition-function evaluator for one parity sector and ``beta``."""

    parity: int = 0
    beta: float = 1.0
    tol: float = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    def moments(self, fugacity, tilt):
        if np.ndim(fugacity) == 0 and np.ndim(tilt) == 0:
            key = (float(fugacity), float(tilt))
            pv = self._cache.get(key)
            if pv is None:
                pv = partition_moments(fugacity, tilt, self.parity, self.beta, self.tol)
                if len(self._cache) < 4096:
                    self._cache[key] = pv
            return pv
        return partition_moments(fugacity, tilt, self.parity, self.beta, self.tol)

    def Z(self, fugacity, tilt):
        return self.moments(fugacity, tilt).Z

    def jacobian(self, fugacity, tilt):
        """``d(rho, u) / d(lambda, theta) = Cov(n, z) diag(1/lambda, 1/theta)``."""
        pv = self.moments(fugacity, tilt)
        scale = np.stack([np.asarray(fugacity, float), np.asarray(tilt, float)], -1)
        return pv.covariance / scale[..., None, :]

    def symmetry_defect(self, fugacity, tilt) -> float:
        """``|Z(lambda, theta) - Z(lambda, 1/theta)| / Z``."""
        a = self.Z(fugacity, tilt)
        b = self.Z(fugacity, 1.0 / np.asarray(tilt, float))
        return float(np.max(np.abs(a - b) / a))


def macro_from_fug(fugacity, tilt, table: ThermoTable | None = None):
    """``(rho, u)`` at the given fugacity and tilt; arrays broadcast."""
    table = table or ThermoTable()
    pv = table.moments(fugacity, tilt)
    rho, u = pv.rho, pv.u
    if np.ndim(rho) == 0:
        return MacroState(float(rho), float(u))
    return MacroState(rho, u)


def low_density_kappa(beta: float = 1.0, parity: int = 0) -> float:
    """``lim lambda / rho`` as ``lambda -> 0`` at ``theta = 1``.

    Only ``n in {0, 1}`` survive, so the ratio is ``G_s / G_{1-s}`` with
    ``G_p = sum_{z = p (mod 2)} exp(-beta z^2 / 2)``.
    """
    g = _gaussian_sums(beta, power=0)
    return float(g[parity] / g[1 - parity])


def _gaussian_sums(beta: float, power: int) -> tuple[float, float]:
    k = z_cutoff(0.0, beta, 1e-17, power=power)
    z = np.arange(-k, k + 1)
    w = z.astype(float) ** power * np.exp(-0.5 * beta * z * z)
    return float(w[z % 2 == 0].sum()), float(w[z % 2 == 1].sum())


def low_density_c(beta: float = 1.0, parity: int = 0, normalized: bool = False) -> float:
    """Low-density tilt constant ``c`` with ``theta = 1 + c u + o(u)``.

    By default the reciprocal of ``d2Z/dtheta2`` at ``lambda = 0, theta = 1``,
    i.e. of ``sum_{z = s (mod 2)} z (z - 1) exp(-beta z^2 / 2)``.  That
    series is the slope only for a partition function normalised to 1 at the
    expansion point; ``normalized=True`` returns the actual slope
    ``Z / Z''`` of the inversion.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    second = _gaussian_sums(beta, power=2)[parity]
    if second == 0.0:
        return float("inf")
    c = 1.0 / second
    if normalized:
        c *= _gaussian_sums(beta, power=0)[parity]
    return c


def _initial_guess(rho, u, table):
    c = low_density_c(table.beta, table.parity, normalized=True)
    theta = 1.0 + c * u
    theta = np.where(theta > 0, theta, np.exp(c * u))
    return np.log(np.maximum(rho, 1e-300)), np.log(theta)


def fug_from_macro(ms, table: ThermoTable | None = None, tol: float = 1e-12,
                   max_iter: int = 200):
    """Invert ``(rho, u) -> (fugacity, tilt)`` by damped Newton in log variables.

    Newton steps minimise ``log Z(a, b) - a rho - b u``, whose Hessian is
    ``Cov(n, z)``; steps are halved until that objective decreases.  Works on
    scalars or arrays.  Converged when both residuals are below
    ``tol (1 + |target|)``.
    """
    table = table or ThermoTable()
    rho = np.asarray(ms[0], float)
    u = np.asarray(ms[1], float)
    if np.any(~(rho > 0)) or np.any(~np.isfinite(u)):
        raise OutOfRange("need rho > 0 and finite u")
    rho, u = np.broadcast_arrays(rho, u)
    a, b = _initial_guess(rho, u, table)
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)

    def objective(a_, b_):
        pv = table.moments(np.exp(a_), np.exp(b_))
        return pv.log_Z - a_ * rho - b_ * u, pv

    def slack(a_, b_, pv_):
        # rounding level of the objective's terms
        return 1e-13 * (1 + np.abs(pv_.log_Z) + np.abs(a_ * rho) + np.abs(b_ * u))

    phi, pv = objective(a, b)
    for it in range(max_iter):
        r1 = pv.rho - rho
        r2 = pv.u - u
        if np.all(np.abs(r1) <= tol * (1 + np.abs(rho))) and np.all(np.abs(r2) <= tol * (1 + np.abs(u))):
            lam, th = np.exp(a), np.exp(b)
            if lam.ndim == 0:
                return float(lam), float(th)
            return lam, th
        C = pv.covariance
        det = C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] ** 2
        da = -(C[..., 1, 1] * r1 - C[..., 0, 1] * r2) / det
        db = -(-C[..., 0, 1] * r1 + C[..., 0, 0] * r2) / det
        # keep single steps moderate in log space
        big = np.maximum(np.abs(da), np.abs(db))
        cap = np.minimum(1.0, 2.0 / np.maximum(big, 1e-300))
        step = cap.copy()
        for _ in range(60):
            na, nb = a + step * da, b + step * db
            nphi, npv = objective(na, nb)
            bad = ~(nphi <= phi + slack(a, b, pv)) & (step > 1e-12)
            if not np.any(bad):
                break
            step = np.where(bad, 0.5 * step, step)
        a, b, phi, pv = na, nb, nphi, npv
    worst = float(np.max(np.abs(pv.rho - rho) + np.abs(pv.u - u)))
    raise NewtonDiverged(f"no convergence after {max_iter} iterations; residual {worst:.3e}")


def fluxes_from_fug(fugacity, tilt):
    fugacity = np.asarray(fugacity, float)
    tilt = np.asarray(tilt, float)
    return fugacity * (tilt - 1.0 / tilt), fugacity * (tilt + 1.0 / tilt)


def macro_flux(ms, table: ThermoTable | None = None, tol: float = 1e-12):
    """``(J_rho, J_u) = (lambda (theta - 1/theta), lambda (theta + 1/theta))`` at ``(rho, u)``."""
    lam, th = fug_from_macro(ms, table, tol)
    j1, j2 = fluxes_from_fug(lam, th)
    if np.ndim(j1) == 0:
        return float(j1), float(j2)
    return j1, j2


def flux_jacobian_eigs(fugacity, tilt, table: ThermoTable | None = None):
    """Characteristic speeds ``(slow, fast)`` of the hydrodynamic system.

    With ``a = log lambda``, ``b = log theta``:
    ``dJ/d(a, b) = [[J_rho, J_u], [J_u, J_rho]]`` and ``d(rho, u)/d(a, b) = Cov``,
    so ``dJ/d(rho, u) = [[J_rho, J_u], [J_u, J_rho]] Cov^{-1}``.
    """
    table = table or ThermoTable()
    pv = table.moments(fugacity, tilt)
    j1, j2 = fluxes_from_fug(fugacity, tilt)
    C = pv.covariance
    det = C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] ** 2
    i00, i01, i11 = C[..., 1, 1] / det, -C[..., 0, 1] / det, C[..., 0, 0] / det
    a11 = j1 * i00 + j2 * i01
    a12 = j1 * i01 + j2 * i11
    a21 = j2 * i00 + j1 * i01
    a22 = j2 * i01 + j1 * i11
    tr = a11 + a22
    disc = np.sqrt(np.maximum((a11 - a22) ** 2 + 4 * a12 * a21, 0.0))
    return 0.5 * (tr - disc), 0.5 * (tr + disc)


class RescaledDeviation(NamedTuple):
    alpha: float
    rho_flux: float
    u_flux: float

    @property
    def total(self) -> float:
        return max(self.rho_flux, self.u_flux)


def rescaled_flux_limit(states, alpha: float, table: ThermoTable | None = None) -> RescaledDeviation:
    """Relative deviation of the rescaled fluxes from ``(rho u, rho)``.

    Each state is mapped to ``(alpha^{2/3} rho, alpha^{1/3} u)``; the fluxes
    there are divided by ``alpha`` and ``alpha^{2/3}`` respectively and
    normalised by their low-density constants ``2 kappa c`` and ``2 kappa``.
    Returned norms are ``||J_hat - target||_2 / ||target||_2`` per component.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    table = table or ThermoTable()
    rho = np.array([s[0] for s in states], float)
    u = np.array([s[1] for s in states], float)
    kappa = low_density_kappa(table.beta, table.parity)
    c = low_density_c(table.beta, table.parity, normalized=True)
    j1, j2 = macro_flux((alpha ** (2 / 3) * rho, alpha ** (1 / 3) * u), table)
    j1 = np.asarray(j1) / alpha / (2 * kappa * c)
    j2 = np.asarray(j2) / alpha ** (2 / 3) / (2 * kappa)
    t1, t2 = rho * u, rho
    d1 = np.linalg.norm(j1 - t1) / np.linalg.norm(t1)
    d2 = np.linalg.norm(j2 - t2) / np.linalg.norm(t2)
    return RescaledDeviation(float(alpha), float(d1), float(d2))


def hydro_table(fugacities, tilts, table: ThermoTable | None = None) -> list[dict]:
    """Rows ``lambda, theta, rho, u, J_rho, J_u`` over the product grid."""
    table = table or ThermoTable()
    L, T = np.meshgrid(np.asarray(fugacities, float), np.asarray(tilts, float), indexing="ij")
    ms = macro_from_fug(L.ravel(), T.ravel(), table)
    j1, j2 = fluxes_from_fug(L.ravel(), T.ravel())
    return [dict(zip(("lambda", "theta", "rho", "u", "J_rho", "J_u"), row))
            for row in zip(L.ravel(), T.ravel(), ms.rho, ms.u, j1, j2)]


class HydroFlux:
    """Interpolated flux model for the finite-volume solvers.

    Tabulates fluxes and characteristic speeds on a regular ``(rho, u)`` grid
    (or scattered nodes from a CSV table) and evaluates them by linear
    interpolation.  States outside the table raise :class:`OutOfRange`.
    """

    name = "hydro"

    def __init__(self, rho_nodes, u_nodes=None, values=None, table: ThermoTable | None = None):
        self.table = table or ThermoTable()
        if u_nodes is None:
            # scattered (points, values) form
            self._points = np.asarray(rho_nodes, float)
            self._interp = LinearNDInterpolator(self._points, np.asarray(values, float))
            self.bounds = (self._points[:, 0].min(), self._points[:, 0].max(),
                           self._points[:, 1].min(), self._points[:, 1].max())
            return
        rho_nodes = np.asarray(rho_nodes, float)
        u_nodes = np.asarray(u_nodes, float)
        if values is None:
            R, U = np.meshgrid(rho_nodes, u_nodes, indexing="ij")
            lam, th = fug_from_macro((R, U), self.table)
            j1, j2 = fluxes_from_fug(lam, th)
            s1, s2 = flux_jacobian_eigs(lam, th, self.table)
            values = np.stack([j1, j2, s1, s2], -1)
        self._interp = RegularGridInterpolator((rho_nodes, u_nodes), values)
        self.bounds = (rho_nodes[0], rho_nodes[-1], u_nodes[0], u_nodes[-1])

    @classmethod
    def regular(cls, rho_range=(0.1, 3.0), u_range=(-1.5, 1.5), shape=(121, 121),
                table: ThermoTable | None = None) -> "HydroFlux":
        return cls(np.linspace(*rho_range, shape[0]), np.linspace(*u_range, shape[1]), table=table)

    @classmethod
    def from_rows(cls, rows, table: ThermoTable | None = None) -> "HydroFlux":
        """Build from ``hydro-table`` rows; speeds are recomputed at each node."""
        table = table or ThermoTable()
        lam = np.array([float(r["lambda"]) for r in rows])
        th = np.array([float(r["theta"]) for r in rows])
        pts = np.array([[float(r["rho"]), float(r["u"])] for r in rows])
        j = np.array([[float(r["J_rho"]), float(r["J_u"])] for r in rows])
        s1, s2 = flux_jacobian_eigs(lam, th, table)
        return cls(pts, values=np.column_stack([j, s1, s2]), table=table)

    @classmethod
    def from_csv(cls, path, table: ThermoTable | None = None) -> "HydroFlux":
        with open(path, newline="") as fh:
            return cls.from_rows(list(csv.DictReader(fh)), table)

    def _eval(self, rho, u):
        pts = np.stack([np.asarray(rho, float), np.asarray(u, float)], -1)
        r0, r1, u0, u1 = self.bounds
        if np.any(pts[..., 0] < r0) or np.any(pts[..., 0] > r1) or np.any(pts[..., 1] < u0) \
                or np.any(pts[..., 1] > u1):
            raise OutOfRange("state outside the flux table")
        out = self._interp(pts)
        if np.any(~np.isfinite(out)):
            raise OutOfRange("state outside the flux table hull")
        return out

    def flux(self, rho, u):
        out = self._eval(rho, u)
        return out[..., 0], out[..., 1]

    def speeds(self, rho, u):
        out = self._eval(rho, u)
        return out[..., 2], out[..., 3]

    def check(self, rho, u):
        if np.any(rho < POSITIVITY_FLOOR):
            raise NonPhysicalState("negative density")
