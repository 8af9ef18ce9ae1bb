"""Entropy/flux pairs: the global convex pair, similarity entropies, residual
checks and discrete entropy production on computed solutions.

A pair ``(S, F)`` is an entropy/flux pair when ``F_rho = u S_rho + S_u`` and
``F_u = rho S_rho``; eliminating ``F`` gives the wave equation
``rho S_rr - u S_ru - S_uu = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import xlogy

from .errors import OutOfRange, OutsideDomain, OutsideValidity, SingularInterval

SINGULAR_Y = 2.0 / math.sqrt(3.0)
SINGULAR_MARGIN = 1e-3

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EntropyPair:
    """Evaluators for an entropy ``S`` and its flux ``F``.

    ``grad_S``/``grad_F`` return arrays with a trailing axis ``(d/drho, d/du)``;
    ``hess_S`` a trailing ``(2, 2)`` block.  ``validity`` maps states to a
    boolean mask.
    """

    S: Evaluator
    F: Evaluator
    grad_S: Evaluator
    grad_F: Evaluator
    hess_S: Evaluator
    validity: Callable[[np.ndarray, np.ndarray], np.ndarray]
    convex: bool
    name: str = "entropy"

    def check_valid(self, rho, u):
        ok = np.asarray(self.validity(np.asarray(rho, float), np.asarray(u, float)))
        if not np.all(ok):
            raise OutsideValidity(f"{self.name}: {np.count_nonzero(~ok)} states outside validity region")


def _stack(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    return np.stack([a, b], axis=-1)


def _hess(a, b, c):
    a, b, c = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float))
    out = np.empty(a.shape + (2, 2))
    out[..., 0, 0] = a
    out[..., 0, 1] = out[..., 1, 0] = b
    out[..., 1, 1] = c
    return out


def canonical_pair() -> EntropyPair:
    """``S = rho log rho + u^2/2``, ``F = u rho (log rho + 1)``.

    Strictly convex on ``rho > 0``, bounded below by ``-1/e``, defined on the
    whole physical domain (``0 log 0 = 0``).
    """

    def S(rho, u):
        return xlogy(rho, rho) + 0.5 * np.square(u)

    def F(rho, u):
        return u * (xlogy(rho, rho) + rho)

    def grad_S(rho, u):
        return _stack(np.log(rho) + 1.0, u)

    def grad_F(rho, u):
        return _stack(u * (np.log(rho) + 2.0), rho * (np.log(rho) + 1.0))

    def hess_S(rho, u):
        return _hess(1.0 / np.asarray(rho, float), 0.0, np.ones_like(np.asarray(u, float)))

    return EntropyPair(S, F, grad_S, grad_F, hess_S,
                       validity=lambda rho, u: np.asarray(rho) >= 0.0,
                       convex=True, name="canonical")


def mass_pair() -> EntropyPair:
    """The first conservation law itself: ``(S, F) = (rho, rho u)``."""
    return EntropyPair(
        S=lambda rho, u: np.asarray(rho, float) + 0.0 * np.asarray(u, float),
        F=lambda rho, u: np.asarray(rho, float) * np.asarray(u, float),
        grad_S=lambda rho, u: _stack(np.ones_like(np.asarray(rho, float)), 0.0 * np.asarray(u, float)),
        grad_F=lambda rho, u: _stack(u, rho),
        hess_S=lambda rho, u: _hess(0.0 * np.asarray(rho, float), 0.0, 0.0 * np.asarray(u, float)),
        validity=lambda rho, u: np.isfinite(np.asarray(rho, float) + np.asarray(u, float)),
        convex=True, name="mass")


def slope_pair() -> EntropyPair:
    """The second conservation law itself: ``(S, F) = (u, rho)``."""
    return EntropyPair(
        S=lambda rho, u: np.asarray(u, float) + 0.0 * np.asarray(rho, float),
        F=lambda rho, u: np.asarray(rho, float) + 0.0 * np.asarray(u, float),
        grad_S=lambda rho, u: _stack(0.0 * np.asarray(rho, float), np.ones_like(np.asarray(u, float))),
        grad_F=lambda rho, u: _stack(np.ones_like(np.asarray(rho, float)), 0.0 * np.asarray(u, float)),
        hess_S=lambda rho, u: _hess(0.0 * np.asarray(rho, float), 0.0, 0.0 * np.asarray(u, float)),
        validity=lambda rho, u: np.isfinite(np.asarray(rho, float) + np.asarray(u, float)),
        convex=True, name="slope")


def flux_equation_residual(pair: EntropyPair, rho, u):
    """Residuals of ``F_rho = u S_rho + S_u`` and ``F_u = rho S_rho``."""
    rho = np.asarray(rho, float)
    u = np.asarray(u, float)
    gs = pair.grad_S(rho, u)
    gf = pair.grad_F(rho, u)
    r1 = gf[..., 0] - (u * gs[..., 0] + gs[..., 1])
    r2 = gf[..., 1] - rho * gs[..., 0]
    return r1, r2


def fd_hessian(S: Evaluator, rho, u, h: float | None = None):
    """Central-difference Hessian of a scalar function of ``(rho, u)``."""
    rho = np.asarray(rho, float)
    u = np.asarray(u, float)
    if h is None:
        h = 1e-4
    hr = h * np.maximum(np.minimum(rho, 1.0), 1e-3)
    hu = h * np.ones_like(u)
    s0 = S(rho, u)
    s_rr = (S(rho + hr, u) - 2.0 * s0 + S(rho - hr, u)) / hr**2
    s_uu = (S(rho, u + hu) - 2.0 * s0 + S(rho, u - hu)) / hu**2
    s_ru = (S(rho + hr, u + hu) - S(rho + hr, u - hu)
            - S(rho - hr, u + hu) + S(rho - hr, u - hu)) / (4.0 * hr * hu)
    return _hess(s_rr, s_ru, s_uu)


def entropy_residual(pair, rho, u, h: float | None = None, relative: bool = False):
    """``rho S_rr - u S_ru - S_uu``; zero exactly when ``S`` admits a flux.

    ``pair`` is an EntropyPair (its analytic Hessian is used) or a bare
    callable ``S(rho, u)``, differentiated by central differences.  With
    ``relative=True`` the residual is divided by the sum of the absolute
    values of its three terms.
    """
    rho = np.asarray(rho, float)
    u = np.asarray(u, float)
    if np.any(rho <= 0.0):
        raise OutsideDomain("entropy residual needs rho > 0")
    if isinstance(pair, EntropyPair):
        hs = pair.hess_S(rho, u)
    else:
        hs = fd_hessian(pair, rho, u, h)
    t1 = rho * hs[..., 0, 0]
    t2 = u * hs[..., 0, 1]
    t3 = hs[..., 1, 1]
    res = t1 - t2 - t3
    if relative:
        scale = np.abs(t1) + np.abs(t2) + np.abs(t3)
        res = np.where(scale > 0, res / np.where(scale > 0, scale, 1.0), res)
    return res[()] if res.ndim == 0 else res


# ---------------------------------------------------------------------------
# similarity entropies S = rho^alpha phi(u / sqrt(rho))
# ---------------------------------------------------------------------------

def similarity_ode_rhs(alpha: float):
    """First-order form of ``3(y^2-4/3) phi'' + (5-8a) y phi' + 4a(a-1) phi = 0``."""
    b = 5.0 - 8.0 * alpha
    c = 4.0 * alpha * (alpha - 1.0)

    def rhs(y, v):
        phi, dphi = v
        return [dphi, -(b * y * dphi + c * phi) / (3.0 * y * y - 4.0)]

    return rhs


def similarity_ode_residual(alpha, y, phi, dphi, ddphi):
    return (3.0 * (y * y - 4.0 / 3.0) * ddphi + (5.0 - 8.0 * alpha) * y * dphi
            + 4.0 * alpha * (alpha - 1.0) * phi)


@dataclass
class SimilarityEntropy:
    """A solution ``phi`` of the similarity ODE on a closed y-interval.

    Samples are kept for export; ``evaluate`` uses the dense ODE solution so
    the entropy can be evaluated anywhere in the interval.
    """

    alpha: float
    y: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    ode_residual: np.ndarray
    y_min: float
    y_max: float
    y_start: float
    _dense: list = field(repr=False, default_factory=list)

    def evaluate(self, y):
        """``(phi, phi', phi'')`` at ``y``; ``phi''`` comes from the ODE."""
        y = np.asarray(y, float)
        if np.any(y < self.y_min - 1e-12) or np.any(y > self.y_max + 1e-12):
            raise OutOfRange(f"y outside [{self.y_min}, {self.y_max}]")
        phi = np.empty_like(y)
        dphi = np.empty_like(y)
        for lo, hi, sol in self._dense:
            m = (y >= lo) & (y <= hi)
            if np.any(m):
                vals = sol(y[m])
                phi[m] = vals[0]
                dphi[m] = vals[1]
        ddphi = -((5.0 - 8.0 * self.alpha) * y * dphi
                  + 4.0 * self.alpha * (self.alpha - 1.0) * phi) / (3.0 * y * y - 4.0)
        return phi, dphi, ddphi

    def contains(self, y):
        y = np.asarray(y, float)
        return (y >= self.y_min) & (y <= self.y_max)


def _check_interval(lo, hi, margin):
    for s in (-SINGULAR_Y, SINGULAR_Y):
        if lo - margin < s < hi + margin or abs(lo - s) < margin or abs(hi - s) < margin:
            raise SingularInterval(
                f"[{lo}, {hi}] reaches y = {s:+.6f} within margin {margin}")


def _fd_residual(alpha, y, dense_eval, lo, hi, h):
    """ODE residual with ``phi''`` from a 5-point stencil on ``phi'``; NaN near the ends.

    ``h`` may vary per sample point.
    """
    res = np.full_like(y, np.nan)
    h = np.broadcast_to(np.asarray(h, float), y.shape)
    inside = (y - 2 * h >= lo) & (y + 2 * h <= hi)
    if not np.any(inside):
        return res
    yi = y[inside]
    hi_ = h[inside]
    d = [dense_eval(yi + k * hi_)[1] for k in (-2, -1, 1, 2)]
    ddphi = (d[0] - 8.0 * d[1] + 8.0 * d[2] - d[3]) / (12.0 * hi_)
    phi, dphi = dense_eval(yi)[:2]
    res[inside] = similarity_ode_residual(alpha, yi, phi, dphi, ddphi)
    return res


def solve_similarity_ode(alpha: float, phi0: float, dphi0: float,
                         y_range: tuple[float, float], step: float = 0.01,
                         y_start: float | None = None, margin: float = SINGULAR_MARGIN,
                         method: str = "DOP853", rtol: float = 1e-12,
                         atol: float = 1e-14) -> SimilarityEntropy:
    """Integrate the similarity ODE with ``phi(y_start) = phi0``, ``phi'(y_start) = dphi0``.

    ``y_start`` defaults to 0 when the interval contains it and to the left
    endpoint otherwise.  The interval may not come within ``margin`` of the
    singular points ``y = +-2/sqrt(3)``.
    """
    lo, hi = float(y_range[0]), float(y_range[1])
    if not hi > lo:
        raise ValueError("y_range must be increasing")
    if step <= 0:
        raise ValueError("step must be positive")
    _check_interval(lo, hi, margin)
    if y_start is None:
        y_start = 0.0 if lo <= 0.0 <= hi else lo
    if not lo <= y_start <= hi:
        raise OutOfRange("y_start must lie in y_range")

    rhs = similarity_ode_rhs(alpha)
    dense = []
    for end in (lo, hi):
        if end == y_start:
            continue
        sol = integrate.solve_ivp(rhs, (y_start, end), [phi0, dphi0], method=method,
                                  rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise RuntimeError(f"ODE integration failed: {sol.message}")
        dense.append((min(y_start, end), max(y_start, end), sol.sol))
    if not dense:
        raise ValueError("degenerate interval")

    n = int(round((hi - lo) / step))
    y = np.linspace(lo, hi, n + 1)

    def dense_eval(yy):
        yy = np.asarray(yy, float)
        out = np.empty((2,) + yy.shape)
        for a, b, sol in dense:
            m = (yy >= a) & (yy <= b)
            if np.any(m):
                out[:, m] = sol(yy[m])
        return out

    phi, dphi = dense_eval(y)
    # derivatives steepen towards the singular points; shrink the stencil there
    dist = np.abs(np.abs(y) - SINGULAR_Y)
    h = np.minimum(min(step / 4.0, 1e-3), 2e-3 * dist)
    res = _fd_residual(alpha, y, dense_eval, lo, hi, h)
    return SimilarityEntropy(alpha=float(alpha), y=y, phi=phi, phi_prime=dphi,
                             ode_residual=res, y_min=lo, y_max=hi,
                             y_start=float(y_start), _dense=dense)


def recover_flux(grad_S: Evaluator, rho: float, u: float, ref: tuple[float, float] = (1.0, 0.0),
                 path: str = "rho-first", tol: float = 1e-11) -> float:
    """Flux ``F(rho, u) - F(ref)`` by quadrature of the entropy equations.

    ``rho-first`` integrates ``F_rho = u S_rho + S_u`` from ``ref`` to
    ``(rho, u_ref)`` and then ``F_u = rho S_rho`` up to ``u``; ``u-first``
    takes the other corner of the rectangle.
    """
    r0, u0 = ref

    def f_rho(r, uu):
        g = grad_S(np.asarray(r, float), np.asarray(uu, float))
        return float(uu * g[..., 0] + g[..., 1])

    def f_u(r, uu):
        g = grad_S(np.asarray(r, float), np.asarray(uu, float))
        return float(r * g[..., 0])

    opts = dict(epsabs=tol, epsrel=tol, limit=200)
    if path == "rho-first":
        a = integrate.quad(lambda r: f_rho(r, u0), r0, rho, **opts)[0]
        b = integrate.quad(lambda uu: f_u(rho, uu), u0, u, **opts)[0]
    elif path == "u-first":
        a = integrate.quad(lambda uu: f_u(r0, uu), u0, u, **opts)[0]
        b = integrate.quad(lambda r: f_rho(r, u), r0, rho, **opts)[0]
    else:
        raise ValueError(f"unknown path {path!r}")
    return a + b


def similarity_to_pair(se: SimilarityEntropy, n_convexity_samples: int = 10_000,
                       seed: int = 0) -> EntropyPair:
    """Entropy/flux pair ``S = rho^a phi(y)``, ``F = rho^(a+1/2) psi(y)``, ``y = u/sqrt(rho)``.

    ``psi = (1.5 a y phi + (1 - 0.75 y^2) phi') / (a + 1/2)`` solves both flux
    equations whenever ``phi`` solves the ODE.  The additive constant is
    fixed by ``F(1, y_start) = 0``.  At ``a = -1/2`` the flux falls back to
    quadrature.
    """
    a = se.alpha

    def split(rho, u):
        rho = np.asarray(rho, float)
        u = np.asarray(u, float)
        if np.any(rho <= 0.0):
            raise OutOfRange("similarity entropies need rho > 0")
        y = u / np.sqrt(rho)
        if not np.all(se.contains(y)):
            raise OutOfRange(f"u/sqrt(rho) leaves [{se.y_min}, {se.y_max}]")
        return rho, u, y

    def S(rho, u):
        rho, u, y = split(rho, u)
        return rho**a * se.evaluate(y)[0]

    def grad_S(rho, u):
        rho, u, y = split(rho, u)
        phi, dphi, _ = se.evaluate(y)
        return _stack(rho ** (a - 1.0) * (a * phi - 0.5 * y * dphi), rho ** (a - 0.5) * dphi)

    def hess_S(rho, u):
        rho, u, y = split(rho, u)
        phi, dphi, ddphi = se.evaluate(y)
        g = a * phi - 0.5 * y * dphi
        dg = (a - 0.5) * dphi - 0.5 * y * ddphi
        s_rr = rho ** (a - 2.0) * ((a - 1.0) * g - 0.5 * y * dg)
        s_ru = rho ** (a - 1.5) * dg
        s_uu = rho ** (a - 1.0) * ddphi
        return _hess(s_rr, s_ru, s_uu)

    def psi(y, phi, dphi):
        return (1.5 * a * y * phi + (1.0 - 0.75 * y * y) * dphi) / (a + 0.5)

    ref = (1.0, se.y_start)
    if abs(a + 0.5) > 1e-12:
        p0, dp0, _ = se.evaluate(np.array([se.y_start]))
        const = float(psi(se.y_start, p0, dp0)[0])

        def F(rho, u):
            rho, u, y = split(rho, u)
            phi, dphi, _ = se.evaluate(y)
            return rho ** (a + 0.5) * psi(y, phi, dphi) - const

        def grad_F(rho, u):
            rho, u, y = split(rho, u)
            phi, dphi, _ = se.evaluate(y)
            dpsi = a * phi - 0.5 * y * dphi
            return _stack(rho ** (a - 0.5) * ((a + 0.5) * psi(y, phi, dphi) - 0.5 * y * dpsi),
                          rho**a * dpsi)
    else:
        def F(rho, u):
            rho, u, _ = split(rho, u)
            flat_r, flat_u = np.broadcast_arrays(rho, u)
            vals = [recover_flux(grad_S, r, uu, ref=ref) for r, uu in zip(flat_r.ravel(), flat_u.ravel())]
            return np.asarray(vals).reshape(flat_r.shape)

        def grad_F(rho, u):
            rho, u, _ = split(rho, u)
            g = grad_S(rho, u)
            return _stack(u * g[..., 0] + g[..., 1], rho * g[..., 0])

    def validity(rho, u):
        rho = np.asarray(rho, float)
        u = np.asarray(u, float)
        safe = np.where(rho > 0, rho, 1.0)
        return (rho > 0) & se.contains(u / np.sqrt(safe))

    pair = EntropyPair(S, F, grad_S, grad_F, hess_S, validity, convex=False,
                       name=f"similarity(alpha={a:g})")
    convex = _sampled_convexity(pair, se, n_convexity_samples, seed)
    return EntropyPair(S, F, grad_S, grad_F, hess_S, validity, convex=convex, name=pair.name)


def _sampled_convexity(pair, se, n, seed, floor=-1e-8):
    rng = np.random.default_rng(seed)
    rho = np.exp(rng.uniform(np.log(0.1), np.log(10.0), n))
    y = rng.uniform(se.y_min, se.y_max, n)
    eig = np.linalg.eigvalsh(pair.hess_S(rho, y * np.sqrt(rho)))
    return bool(np.all(eig[..., 0] >= floor))


# ---------------------------------------------------------------------------
# entropy production on discrete solutions
# ---------------------------------------------------------------------------

def _shift(a, k, periodic):
    if periodic:
        return np.roll(a, -k)
    out = np.empty_like(a)
    if k > 0:
        out[:-k] = a[k:]
        out[-k:] = a[-1]
    else:
        out[-k:] = a[:k]
        out[:-k] = a[0]
    return out


def entropy_production(fields: Sequence, pair: EntropyPair, dt: float | None = None) -> np.ndarray:
    """Discrete ``D_t S + D_x F`` per cell between consecutive fields.

    Forward difference in time, centred in space at the earlier level.
    Returns an array of shape ``(len(fields) - 1, n_cells)``; with ``dt=None``
    the time steps come from the fields' ``time`` attributes.
    """
    if len(fields) < 2:
        raise ValueError("need at least two fields")
    grid = fields[0].grid
    periodic = grid.periodic
    for f in fields:
        if f.grid != grid:
            raise ValueError("fields must share one grid")
        pair.check_valid(f.rho, f.u)
    out = np.empty((len(fields) - 1, grid.n_cells))
    for k in range(len(fields) - 1):
        f0, f1 = fields[k], fields[k + 1]
        step = dt if dt is not None else f1.time - f0.time
        if step <= 0:
            raise ValueError("time step between fields must be positive")
        flux = pair.F(f0.rho, f0.u)
        dfx = (_shift(flux, 1, periodic) - _shift(flux, -1, periodic)) / (2.0 * grid.dx)
        out[k] = (pair.S(f1.rho, f1.u) - pair.S(f0.rho, f0.u)) / step + dfx
    return out
