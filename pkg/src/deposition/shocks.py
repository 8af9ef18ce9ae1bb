"""Rankine-Hugoniot jump algebra and Lax stability of discontinuities."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .characteristics import PhysState, char_speeds
from .errors import DegenerateJump, NoRealSpeed, NotRankineHugoniot, ZeroSpeed

RH_TOL = 1e-8


class ShockClass(enum.Enum):
    BackShock = "BackShock"
    FrontShock = "FrontShock"
    Unstable = "Unstable"


@dataclass(frozen=True)
class ShockData:
    left: PhysState
    right: PhysState
    sigma: float
    classification: ShockClass


def _jumps(left, right, sigma):
    d_rho = right[0] - left[0]
    d_u = right[1] - left[1]
    d_rhou = right[0] * right[1] - left[0] * left[1]
    return d_rhou - sigma * d_rho, d_rho - sigma * d_u


def rh_residual(left, right, sigma):
    """Residuals ``([rho u] - sigma [rho], [rho] - sigma [u])`` with ``[.] = right - left``.

    Both vanish exactly when ``(left, right, sigma)`` is a Rankine-Hugoniot
    discontinuity.  Broadcasts over arrays.
    """
    d_rho = np.asarray(right[0], float) - np.asarray(left[0], float)
    d_u = np.asarray(right[1], float) - np.asarray(left[1], float)
    if np.any(d_rho == 0.0) or np.any(d_u == 0.0):
        raise DegenerateJump("right and left states must differ in both rho and u")
    r1, r2 = _jumps(left, right, sigma)
    return r1, r2


def right_state_from_speed(left, sigma) -> PhysState:
    """State on the right of a discontinuity of speed ``sigma``.

    ``rho_r = sigma^2 - sigma u_l`` and ``u_r = sigma - rho_l / sigma``: the
    new density depends on ``u_l`` only and the new slope on ``rho_l`` only.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma == 0.0):
        raise ZeroSpeed("sigma = 0: the jump relation divides by sigma")
    rho_l = np.asarray(left[0], float)
    u_l = np.asarray(left[1], float)
    rho_r = sigma * sigma - sigma * u_l
    u_r = sigma - rho_l / sigma
    if rho_r.ndim == 0:
        return PhysState(float(rho_r), float(u_r))
    return PhysState(rho_r, u_r)


def shock_speeds(left, right):
    """Both roots of ``sigma^2 - sigma u_r - rho_l = 0`` as ``(sigma_plus, sigma_minus)``.

    The caller picks the root with vanishing ``rh_residual``.
    """
    rho_l = float(left[0])
    u_r = float(right[1])
    disc = u_r * u_r + 4.0 * rho_l
    if disc < 0.0:
        raise NoRealSpeed(f"u_r^2 + 4 rho_l = {disc:.3e} < 0")
    root = math.sqrt(disc)
    return 0.5 * (u_r + root), 0.5 * (u_r - root)


def rh_speed(left, right, tol: float = RH_TOL) -> float:
    """The root of ``shock_speeds`` that satisfies both jump relations."""
    best = None
    for sigma in shock_speeds(left, right):
        if _is_rh(left, right, sigma, tol):
            if best is None or abs(sigma) > abs(best):
                best = sigma
    if best is None:
        raise NotRankineHugoniot("no root of the speed quadratic satisfies the jump relations")
    return best


def _is_rh(left, right, sigma, tol):
    r1, r2 = _jumps(left, right, sigma)
    rho_l, u_l = left
    rho_r, u_r = right
    scale = max(1.0, abs(rho_l * u_l), abs(rho_r * u_r), abs(rho_l), abs(rho_r),
                abs(sigma * u_l), abs(sigma * u_r))
    return abs(r1) <= tol * scale and abs(r2) <= tol * scale


def classify_discontinuity(left, right, sigma: float, margin: float = 0.0) -> ShockClass:
    """Lax classification of a Rankine-Hugoniot discontinuity.

    Back shock: ``mu(R) < sigma < min(mu(L), lam(R))``.  Front shock:
    ``max(lam(R), mu(L)) < sigma < lam(L)``.  Inequalities are strict (by at
    least ``margin``); equality cases come back Unstable.
    """
    left = PhysState(float(left[0]), float(left[1]))
    right = PhysState(float(right[0]), float(right[1]))
    sigma = float(sigma)
    if not _is_rh(left, right, sigma, RH_TOL):
        raise NotRankineHugoniot(
            f"({left}, {right}, sigma={sigma}) violates the jump relations")
    if sigma == 0.0:
        return ShockClass.Unstable
    lam_l, mu_l = char_speeds(*left)
    lam_r, mu_r = char_speeds(*right)
    if mu_r + margin < sigma < min(mu_l, lam_r) - margin:
        return ShockClass.BackShock
    if max(lam_r, mu_l) + margin < sigma < lam_l - margin:
        return ShockClass.FrontShock
    return ShockClass.Unstable


def make_shock(left, sigma: float) -> ShockData:
    """Complete a left state and speed into a classified ShockData."""
    left = PhysState(float(left[0]), float(left[1]))
    right = right_state_from_speed(left, sigma)
    return ShockData(left, right, float(sigma), classify_discontinuity(left, right, sigma))
