"""Flux estimators, marginals and the exhaustive two-site balance check."""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .gibbs import GibbsParams
from .rates import RateFunction
from .simulate import SimulationResult
from .state import BrickState


class FluxEstimate(NamedTuple):
    flux_plus: float
    flux_plus_se: float
    flux_minus: float
    flux_minus_se: float
    samples: int


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def estimate_flux(data, rf: RateFunction, n_batches: int = 20) -> FluxEstimate:
    """Monte Carlo estimates of ``<n r(z)>`` and ``<n r(-z)>``.

    ``data`` is a :class:`BrickState`, a sequence of them, or a pair of
    arrays ``(n, z)``: sites are treated as independent.  A
    :class:`SimulationResult` is averaged over its recorded snapshots with
    batch-means standard errors (``n_batches`` contiguous batches).
    """
    if isinstance(data, SimulationResult):
        fp = np.array([np.mean(n * rf.r(z)) for n, z in zip(data.n, data.z)])
        fm = np.array([np.mean(n * rf.r(-z)) for n, z in zip(data.n, data.z)])
        nb = min(n_batches, fp.size)
        if nb < 2:
            raise ValueError("need at least two recorded snapshots")
        bp = np.array([b.mean() for b in np.array_split(fp, nb)])
        bm = np.array([b.mean() for b in np.array_split(fm, nb)])
        (mp, sp), (mm, sm) = _mean_se(bp), _mean_se(bm)
        return FluxEstimate(mp, sp, mm, sm, int(fp.size * data.L))
    if isinstance(data, BrickState):
        n, z = data.n, data.z
    elif isinstance(data, tuple) and len(data) == 2 and not isinstance(data[0], BrickState):
        n, z = np.asarray(data[0]), np.asarray(data[1])
    else:
        n = np.concatenate([s.n for s in data])
        z = np.concatenate([s.z for s in data])
    (mp, sp), (mm, sm) = _mean_se(n * rf.r(z)), _mean_se(n * rf.r(-z))
    return FluxEstimate(mp, sp, mm, sm, int(n.size))


def empirical_marginal(n: np.ndarray, z: np.ndarray) -> dict:
    """Relative frequencies of single-site values ``(n, z)``."""
    pairs, counts = np.unique(np.stack([n, z], axis=1), axis=0, return_counts=True)
    return {(int(a), int(b)): c / n.size for (a, b), c in zip(pairs, counts)}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def _log_weight(n, z, gp: GibbsParams, rf: RateFunction):
    from scipy.special import gammaln

    return n * np.log(gp.fugacity) - gammaln(n + 1) + z * np.log(gp.tilt) - np.log(rf.R(z))


def two_site_balance_residual(rf: RateFunction, fugacity: float = 0.8, tilt: float = 1.2,
                              n_max: int = 15, z_max: int = 12,
                              parities: Sequence[tuple[int, int]] = ((0, 0), (0, 1), (1, 0), (1, 1)),
                              weight_rate: RateFunction | None = None) -> float:
    """Largest relative violation of the two-site stationarity identity.

    For a product of single-site Gibbs weights ``mu`` the identity
    ``sum n_j r(z_j) mu mu f(Theta_{j+} omega) = sum n_{j+1} r(z_{j+1}) mu mu f(omega)``
    must hold for every ``f``; it is checked for each indicator ``f`` of a
    pair ``(omega_j, omega_{j+1})`` in the box ``n <= n_max``, ``|z| <= z_max``
    whose preimage also lies in the box.  The mirror identity for left jumps,
    with ``r(-z)`` and the pair ``(omega_{j-1}, omega_j)``, is checked too.
    Weights are unnormalised; the residual is relative to the larger side.
    ``weight_rate`` builds the weights from another rate function (default
    ``rf``), which breaks the identity on purpose.
    """
    gp = GibbsParams(fugacity, tilt)
    wr = rf if weight_rate is None else weight_rate
    n = np.arange(n_max + 1)
    z = np.arange(-z_max, z_max + 1)
    N1, Z1, N2, Z2 = np.meshgrid(n, z, n, z, indexing="ij")
    worst = 0.0
    for s1, s2 in parities:
        ok = ((N1 + Z1) % 2 == s1) & ((N2 + Z2) % 2 == s2)
        for direction in (+1, -1):
            # target (n1', z1', n2', z2') for the pair (j, j+1) right moves,
            # (j-1, j) left moves: preimage has one particle more at the source
            if direction > 0:
                src = (N1 + 1, Z1 + 1, N2 - 1, Z2 - 1)
                lhs_rate = src[0] * rf.r(src[1])
                rhs_rate = N2 * rf.r(Z2)
            else:
                src = (N1 - 1, Z1 + 1, N2 + 1, Z2 - 1)
                lhs_rate = src[2] * rf.r(-src[3])
                rhs_rate = N1 * rf.r(-Z1)
            inside = ok & (src[0] >= 0) & (src[2] >= 0) & (src[0] <= n_max) & (src[2] <= n_max) \
                & (np.abs(src[1]) <= z_max) & (np.abs(src[3]) <= z_max)
            s = [np.where(inside, a, 0) for a in src]
            lhs = lhs_rate * np.exp(_log_weight(s[0], s[1], gp, wr) + _log_weight(s[2], s[3], gp, wr))
            rhs = rhs_rate * np.exp(_log_weight(N1, Z1, gp, wr) + _log_weight(N2, Z2, gp, wr))
            lhs, rhs = lhs[inside], rhs[inside]
            scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), np.finfo(float).tiny)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    return worst
