"""Pointwise characteristic structure of the deposition system.

The system is ``rho_t + (rho u)_x = 0``, ``u_t + rho_x = 0`` with flux
Jacobian ``[[u, rho], [1, 0]]``.  Every function here broadcasts over numpy
arrays; scalars in, scalars out.
"""
from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .errors import NotStrictlyHyperbolic, OutsideDomain

# negative radicands down to this value are rounding noise and clamp to 0
RADICAND_GUARD = 1e-14


class PhysState(NamedTuple):
    """A point ``(rho, u)`` of state space; fields may be arrays."""

    rho: float
    u: float

    def mirror(self) -> "PhysState":
        """Image under ``(rho, u, x) -> (rho, -u, -x)``."""
        return PhysState(self.rho, -self.u)


class DomainClass(enum.Enum):
    PhysicalInterior = "PhysicalInterior"
    PhysicalBoundary = "PhysicalBoundary"
    HyperbolicNonphysical = "HyperbolicNonphysical"
    NonHyperbolic = "NonHyperbolic"
    UmbilicPoint = "UmbilicPoint"


class CharData(NamedTuple):
    """Eigenvalues and eigenvectors in the ``l=(lam, rho)``, ``r=(lam, 1)`` normalization."""

    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    left_plus: np.ndarray
    left_minus: np.ndarray
    right_plus: np.ndarray
    right_minus: np.ndarray


def _clamped(x, what):
    x = np.asarray(x, dtype=float)
    if np.any(x < -RADICAND_GUARD):
        raise OutsideDomain(f"negative radicand in {what}: min={x.min():.3e}")
    return np.maximum(x, 0.0)


def _out(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def discriminant(rho, u):
    """``u**2 + 4 rho``; positive exactly on the strictly hyperbolic domain."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    return _out(u * u + 4.0 * rho)


def flux_jacobian(rho, u):
    rho, u = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float))
    jac = np.empty(rho.shape + (2, 2))
    jac[..., 0, 0] = u
    jac[..., 0, 1] = rho
    jac[..., 1, 0] = 1.0
    jac[..., 1, 1] = 0.0
    return jac


def char_speeds(rho, u):
    """Characteristic speeds ``(lam, mu)`` with ``mu <= lam``.

    Defined on the closure of the hyperbolic domain; no strictness check.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    q = np.sqrt(_clamped(u * u + 4.0 * rho, "u^2+4rho"))
    return _out(0.5 * (q + u)), _out(-0.5 * (q - u))


def char_decomposition(rho, u) -> CharData:
    """Eigenvalues and left/right eigenvectors of the flux Jacobian.

    Raises NotStrictlyHyperbolic where ``u**2 + 4 rho <= 0``.
    """
    rho, u = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float))
    disc = u * u + 4.0 * rho
    if np.any(disc <= 0.0):
        raise NotStrictlyHyperbolic("u^2 + 4 rho <= 0: eigenvalues coincide or are complex")
    q = np.sqrt(disc)
    lam = 0.5 * (q + u)
    mu = -0.5 * (q - u)
    one = np.ones_like(rho)
    return CharData(
        lambda_plus=_out(lam),
        lambda_minus=_out(mu),
        left_plus=np.stack([lam, rho], axis=-1),
        left_minus=np.stack([mu, rho], axis=-1),
        right_plus=np.stack([lam, one], axis=-1),
        right_minus=np.stack([mu, one], axis=-1),
    )


def riemann_w(rho, u):
    """Riemann invariant carried with speed ``lam``; defined where ``sqrt(u^2+4rho) >= u``."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    q = np.sqrt(_clamped(u * u + 4.0 * rho, "u^2+4rho"))
    a = _clamped(q - u, "sqrt(u^2+4rho)-u")
    return _out(-np.sqrt(a) * (q + 2.0 * u))


def riemann_z(rho, u):
    """Riemann invariant carried with speed ``mu``; ``z(rho, u) == w(rho, -u)``."""
    return riemann_w(rho, -np.asarray(u, dtype=float))


def riemann_invariants(rho, u):
    """Return ``(w, z)``; both are defined on the physical domain ``rho >= 0``."""
    return riemann_w(rho, u), riemann_z(rho, u)


def _require_interior(rho):
    if np.any(np.asarray(rho) <= 0.0):
        raise OutsideDomain("gradient of Riemann invariants needs rho > 0")


def riemann_gradients(rho, u):
    """Analytic gradients ``(grad w, grad z)`` in ``(d/drho, d/du)`` order.

    ``grad w = -(3 / (2 sqrt(a))) (2, a)`` with ``a = sqrt(u^2+4rho) - u``,
    which is parallel to the left eigenvector ``(lam, rho)``.
    """
    rho, u = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float))
    _require_interior(rho)
    q = np.sqrt(u * u + 4.0 * rho)
    a = q - u
    b = q + u
    sa, sb = np.sqrt(a), np.sqrt(b)
    grad_w = np.stack([-3.0 / sa, -1.5 * sa], axis=-1)
    grad_z = np.stack([-3.0 / sb, 1.5 * sb], axis=-1)
    return grad_w, grad_z


def _hessian_w(rho, u):
    q = np.sqrt(u * u + 4.0 * rho)
    a = q - u
    sa = np.sqrt(a)
    pref = 3.0 / (q * sa)
    hess = np.empty(np.shape(rho) + (2, 2))
    hess[..., 0, 0] = pref / a
    hess[..., 0, 1] = hess[..., 1, 0] = -0.5 * pref
    hess[..., 1, 1] = 0.25 * pref * a
    return hess


def riemann_hessians(rho, u):
    """Analytic Hessians of ``w`` and ``z``.

    Both are rank one and positive semidefinite: the invariants are convex
    but affine along one direction.
    """
    rho, u = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float))
    _require_interior(rho)
    hess_w = _hessian_w(rho, u)
    hess_z = _hessian_w(rho, -u)
    # z(rho, u) = w(rho, -u) flips the sign of the mixed derivative
    hess_z[..., 0, 1] *= -1.0
    hess_z[..., 1, 0] *= -1.0
    return hess_w, hess_z


def domain_classify(rho: float, u: float) -> DomainClass:
    """Classify a single state against the physical and hyperbolic domains."""
    rho = float(rho)
    u = float(u)
    if rho == 0.0 and u == 0.0:
        return DomainClass.UmbilicPoint
    if u * u + 4.0 * rho <= 0.0:
        return DomainClass.NonHyperbolic
    if rho > 0.0:
        return DomainClass.PhysicalInterior
    if rho == 0.0:
        return DomainClass.PhysicalBoundary
    return DomainClass.HyperbolicNonphysical


def genuine_nonlinearity(rho, u):
    """Closed forms ``grad(lam).r = 2 lam/(lam-mu)`` and ``grad(mu).s = 2 mu/(mu-lam)``."""
    rho, u = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float))
    disc = u * u + 4.0 * rho
    if np.any(disc <= 0.0):
        raise NotStrictlyHyperbolic("genuine nonlinearity needs u^2 + 4 rho > 0")
    q = np.sqrt(disc)
    lam = 0.5 * (q + u)
    mu = -0.5 * (q - u)
    return _out(2.0 * lam / q), _out(-2.0 * mu / q)


def genuine_nonlinearity_fd(rho, u, h: float = 1e-6):
    """Directional derivatives of the speeds along their right eigenvectors by central differences."""
    rho, u = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float))
    cd = char_decomposition(rho, u)
    r_plus = cd.right_plus
    r_minus = cd.right_minus

    def lam_at(dr, du):
        return char_speeds(rho + dr, u + du)[0]

    def mu_at(dr, du):
        return char_speeds(rho + dr, u + du)[1]

    g_lam = (lam_at(h * r_plus[..., 0], h * r_plus[..., 1])
             - lam_at(-h * r_plus[..., 0], -h * r_plus[..., 1])) / (2 * h)
    g_mu = (mu_at(h * r_minus[..., 0], h * r_minus[..., 1])
            - mu_at(-h * r_minus[..., 0], -h * r_minus[..., 1])) / (2 * h)
    return _out(np.asarray(g_lam)), _out(np.asarray(g_mu))
