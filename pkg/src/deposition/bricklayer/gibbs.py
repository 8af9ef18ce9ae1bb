"""Equilibrium product measures ``mu_{s, lambda, theta}`` for the exponential rate family.

Per site ``(n, z)`` with ``n + z = s (mod 2)`` carries weight
``lambda^n / n! * theta^z * exp(-beta z^2 / 2)``.  The sum over ``n`` is
done in closed form by parity (``cosh``/``sinh``); the sum over ``z`` is
truncated where a geometric tail bound drops below the requested tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonConvergent
from .state import BrickState

DEFAULT_TOL = 1e-12
MAX_ZCUT = 100_000


@dataclass(frozen=True)
class GibbsParams:
    fugacity: float
    tilt: float
    parity: int = 0
    beta: float = 1.0

    def __post_init__(self):
        if not self.fugacity > 0:
            raise ValueError("fugacity must be positive")
        if not (self.tilt > 0 and np.isfinite(self.tilt)):
            raise ValueError("tilt must lie in (0, inf)")
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def z_cutoff(log_tilt, beta: float, tol: float = DEFAULT_TOL, power: int = 2) -> int:
    """Smallest ``K`` whose neglected ``|z| > K`` mass (moments up to ``power``) is below ``tol``
    relative to the ``z = round(b / beta)`` term, ``b = |log theta|``.

    For ``z >= K`` consecutive terms shrink at least by
    ``q = ((K+1)/K)^power exp(b - beta (K + 1/2))``, so the tail is bounded by
    ``t_{K+1} / (1 - q)``.
    """
    b = float(np.max(np.abs(log_tilt)))
    if tol <= 0:
        raise ValueError("tol must be positive")
    peak = b / beta
    log_peak = b * peak - 0.5 * beta * peak * peak
    k = max(int(np.ceil(peak)) + 1, 2)
    while k <= MAX_ZCUT:
        q = ((k + 1) / k) ** power * np.exp(b - beta * (k + 0.5))
        if q < 1:
            z = k + 1
            log_t = power * np.log(z) + b * z - 0.5 * beta * z * z
            if np.exp(log_t - log_peak) / (1 - q) < tol:
                return k
        k += 1
    raise NonConvergent(f"z tail bound not met below |z| = {MAX_ZCUT}")


@dataclass(frozen=True)
class PartitionValues:
    """Moments ``M[i, j] = sum n^i z^j w(n, z)`` (``i + j <= 2``) scaled by ``exp(-log_scale)``.

    Arrays broadcast over the evaluated ``(fugacity, tilt)`` points.
    """

    fugacity: np.ndarray
    tilt: np.ndarray
    M: np.ndarray
    log_scale: np.ndarray
    zcut: int
    dZ_dlam_scaled: np.ndarray

    @property
    def Z(self):
        return self.M[0, 0] * np.exp(self.log_scale)

    @property
    def log_Z(self):
        return np.log(self.M[0, 0]) + self.log_scale

    @property
    def dZ_dlam(self):
        return self.dZ_dlam_scaled * np.exp(self.log_scale)

    @property
    def dZ_dtheta(self):
        return self.M[0, 1] / self.tilt * np.exp(self.log_scale)

    @property
    def d2Z_dtheta2(self):
        return (self.M[0, 2] - self.M[0, 1]) / self.tilt ** 2 * np.exp(self.log_scale)

    @property
    def rho(self):
        return self.M[1, 0] / self.M[0, 0]

    @property
    def u(self):
        return self.M[0, 1] / self.M[0, 0]

    @property
    def covariance(self):
        """``[[Var n, Cov(n, z)], [Cov(n, z), Var z]]``, trailing axes of shape (2, 2)."""
        m = self.M / self.M[0, 0]
        vn = m[2, 0] - m[1, 0] ** 2
        c = m[1, 1] - m[1, 0] * m[0, 1]
        vz = m[0, 2] - m[0, 1] ** 2
        return np.stack([np.stack([vn, c], -1), np.stack([c, vz], -1)], -2)

    def values(self):
        """``(Z, dZ/dlambda, dZ/dtheta, d2Z/dtheta2)``."""
        return self.Z, self.dZ_dlam, self.dZ_dtheta, self.d2Z_dtheta2


def partition_moments(fugacity, tilt, parity: int = 0, beta: float = 1.0,
                      tol: float = DEFAULT_TOL) -> PartitionValues:
    """Vectorised partition function and its low moments."""
    lam, th = np.broadcast_arrays(np.asarray(fugacity, float), np.asarray(tilt, float))
    if np.any(lam < 0) or np.any(th <= 0) or not np.all(np.isfinite(th)):
        raise ValueError("need fugacity >= 0 and tilt in (0, inf)")
    b = np.log(th)
    k = z_cutoff(b, beta, tol)
    z = np.arange(-k, k + 1, dtype=float)
    logw = b[..., None] * z - 0.5 * beta * z * z
    shift = np.max(logw, axis=-1)
    w = np.exp(logw - shift[..., None])
    # G[q][j] = sum over z = q (mod 2) of z^j w
    G = [[np.sum(w[..., (z.astype(int) & 1) == q] * z[(z.astype(int) & 1) == q] ** j, -1)
          for j in range(3)] for q in (0, 1)]
    # n sums scaled by exp(-lambda): even -> cosh, odd -> sinh
    even = 0.5 * (1.0 + np.exp(-2.0 * lam))
    odd = -0.5 * np.expm1(-2.0 * lam)
    N0 = (even, odd)
    N1 = (lam * odd, lam * even)
    N2 = (lam * lam * even + lam * odd, lam * lam * odd + lam * even)
    N = (N0, N1, N2)
    M = np.zeros((3, 3) + lam.shape)
    for i in range(3):
        for j in range(3 - i):
            M[i, j] = sum(N[i][(parity - q) % 2] * G[q][j] for q in (0, 1))
    dlam = sum(N0[(parity - q + 1) % 2] * G[q][0] for q in (0, 1))
    return PartitionValues(lam, th, M, shift + lam, k, dlam)


def partition_function(gp: GibbsParams, tol: float = DEFAULT_TOL):
    """``(Z_s, dZ/dlambda, dZ/dtheta, d2Z/dtheta2)`` at ``gp``."""
    pv = partition_moments(gp.fugacity, gp.tilt, gp.parity, gp.beta, tol)
    return tuple(float(v) for v in pv.values())


def site_pmf(gp: GibbsParams, n_max: int, z_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact single-site probabilities on ``0..n_max`` x ``-z_max..z_max``.

    Returns ``(n_values, z_values, P)`` with ``P[i, j] = mu(n_i, z_j)``.
    """
    from scipy.special import gammaln

    n = np.arange(n_max + 1)
    z = np.arange(-z_max, z_max + 1)
    logw = (n[:, None] * np.log(gp.fugacity) - gammaln(n[:, None] + 1)
            + z[None, :] * np.log(gp.tilt) - 0.5 * gp.beta * z[None, :] ** 2)
    pv = partition_moments(gp.fugacity, gp.tilt, gp.parity, gp.beta)
    P = np.exp(logw - float(pv.log_Z))
    P[(n[:, None] + z[None, :]) % 2 != gp.parity] = 0.0
    return n, z, P


def _z_proposal(gp: GibbsParams):
    k = z_cutoff(np.log(gp.tilt), gp.beta, 1e-17, power=0)
    z = np.arange(-k, k + 1)
    logw = z * np.log(gp.tilt) - 0.5 * gp.beta * z * z
    p = np.exp(logw - logw.max())
    return z, p / p.sum()


def sample_sites(gp: GibbsParams, size: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """I.i.d. ``(n, z)`` draws: Poisson x tilted discrete Gaussian, rejected unless the parity matches."""
    rng = np.random.default_rng(rng)
    zs, p = _z_proposal(gp)
    n_out = np.empty(size, dtype=np.int64)
    z_out = np.empty(size, dtype=np.int64)
    filled = 0
    while filled < size:
        m = max(2 * (size - filled), 16)
        n = rng.poisson(gp.fugacity, m)
        z = rng.choice(zs, size=m, p=p)
        ok = (n + z) % 2 == gp.parity
        take = min(int(ok.sum()), size - filled)
        n_out[filled:filled + take] = n[ok][:take]
        z_out[filled:filled + take] = z[ok][:take]
        filled += take
    return n_out, z_out


def sample_gibbs(gp: GibbsParams, L: int, rng=None) -> BrickState:
    """A ring of ``L`` i.i.d. sites drawn from ``mu_{s, lambda, theta}``."""
    if L < 2:
        raise ValueError("need L >= 2")
    n, z = sample_sites(gp, L, rng)
    return BrickState.from_arrays(n, z)


def gibbs_expectations(gp: GibbsParams, tol: float = DEFAULT_TOL) -> dict:
    """Exact ``rho``, ``u``, covariance and the flux identities ``lambda theta^{+-1}``."""
    pv = partition_moments(gp.fugacity, gp.tilt, gp.parity, gp.beta, tol)
    return {
        "rho": float(pv.rho),
        "u": float(pv.u),
        "covariance": np.asarray(pv.covariance, float),
        "flux_plus": gp.fugacity * gp.tilt,
        "flux_minus": gp.fugacity / gp.tilt,
    }
