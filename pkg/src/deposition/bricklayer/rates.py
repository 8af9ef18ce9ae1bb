"""Jump-rate functions ``r(z)`` with ``r(z) r(1 - z) = 1``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class RateFunction:
    """Monotone rate ``r(z)`` and its product ``R(z) = r(1) ... r(|z|)``.

    The default family is ``r(z) = exp(beta (z - 1/2))`` with
    ``R(z) = exp(beta z^2 / 2)``.  :meth:`tabulated` wraps arbitrary values on
    ``-K..K`` instead.
    """

    beta: float = 1.0
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.table is None:
            if not self.beta > 0:
                raise ValueError("beta must be positive")
            return
        tab = np.asarray(self.table, dtype=float)
        if tab.ndim != 1 or tab.size % 2 == 0 or tab.size < 3:
            raise ValueError("table must hold r(-K..K), an odd number of values")
        if np.any(tab <= 0) or np.any(np.diff(tab) < 0):
            raise ValueError("rates must be positive and non-decreasing")
        k = tab.size // 2
        zs = np.arange(-k + 1, k + 1)
        prod = tab[zs + k] * tab[1 - zs + k]
        if np.max(np.abs(prod - 1.0)) > NORMALIZATION_TOL:
            raise ValueError("table violates r(z) r(1 - z) = 1")
        object.__setattr__(self, "table", tab)

    @classmethod
    def tabulated(cls, values) -> "RateFunction":
        return cls(beta=float("nan"), table=np.asarray(values, dtype=float))

    @property
    def is_exponential(self) -> bool:
        return self.table is None

    @property
    def zmax(self) -> int:
        """Largest ``|z|`` at which ``r`` is available (finite for tables)."""
        if self.table is None:
            return 10**9
        return self.table.size // 2

    @property
    def theta_star(self) -> float:
        """``lim r(k)``; the last tabulated value for tables."""
        return math.inf if self.table is None else float(self.table[-1])

    def r(self, z):
        z = np.asarray(z)
        if self.table is None:
            out = np.exp(self.beta * (z - 0.5))
        else:
            k = self.zmax
            if np.any(np.abs(z) > k):
                raise ValueError(f"|z| exceeds the tabulated range {k}")
            out = self.table[z.astype(int) + k]
        return float(out) if out.ndim == 0 else out

    def R(self, z):
        z = np.asarray(z)
        if self.table is None:
            out = np.exp(0.5 * self.beta * z.astype(float) ** 2)
        else:
            k = self.zmax
            cum = np.concatenate([[1.0], np.cumprod(self.table[k + 1:])])
            a = np.abs(z).astype(int)
            if np.any(a > k):
                raise ValueError(f"|z| exceeds the tabulated range {k}")
            out = cum[a]
        return float(out) if out.ndim == 0 else out

    def lookup(self, zcap: int | None = None) -> np.ndarray:
        """``r(-K..K)`` as an array, the form consumed by the simulation kernel.

        For the exponential family ``K`` is capped so that rates stay finite.
        """
        if self.table is not None:
            return self.table.copy()
        k = zcap if zcap is not None else int(min(64, 600.0 / self.beta))
        return np.exp(self.beta * (np.arange(-k, k + 1) - 0.5))


def rate(z, beta: float = 1.0):
    """``exp(beta (z - 1/2))``."""
    return RateFunction(beta).r(z)
