"""Ring configurations and the single-event reference stepper."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import FrozenState
from .rates import RateFunction


@dataclass
class BrickState:
    """Occupations ``n``, slopes ``z`` and per-edge brick counts ``h`` on a ring.

    Edge ``j`` joins sites ``j`` and ``j + 1``.  A brick laid on edge ``j``
    lowers ``z_j`` and raises ``z_{j+1}``, so ``z_j - (h_{j-1} - h_j)`` is
    constant in time; it vanishes identically when the state was built with
    ``sum(z) == 0`` and heights derived from the slopes.
    """

    n: np.ndarray
    z: np.ndarray
    h: np.ndarray
    s: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.int64)
        self.z = np.asarray(self.z, dtype=np.int64)
        self.h = np.asarray(self.h, dtype=np.int64)
        self.s = np.asarray(self.s, dtype=np.int64)
        L = self.n.size
        if L < 2 or any(a.shape != (L,) for a in (self.z, self.h, self.s)):
            raise ValueError("n, z, h and s must be 1-d arrays of one length >= 2")
        if np.any(self.n < 0):
            raise ValueError("occupations must be non-negative")
        if np.any((self.n + self.z) % 2 != self.s):
            raise ValueError("parity bits disagree with n + z")

    @classmethod
    def from_arrays(cls, n, z, heights: bool | None = None, time: float = 0.0) -> "BrickState":
        """Build a state; heights are derived from ``z`` whenever ``sum(z) == 0``.

        ``heights=True`` demands that (raising otherwise), ``False`` starts
        every edge at zero.
        """
        n = np.asarray(n, dtype=np.int64)
        z = np.asarray(z, dtype=np.int64)
        balanced = int(z.sum()) == 0
        if heights and not balanced:
            raise ValueError("height tracking on a ring needs sum(z) == 0")
        if heights is None:
            heights = balanced
        if heights:
            h = -np.cumsum(z)
            h -= h.min()
        else:
            h = np.zeros_like(z)
        return cls(n, z, h, (n + z) % 2, time)

    @classmethod
    def uniform(cls, L: int, n: int = 0, z: int = 0) -> "BrickState":
        return cls.from_arrays(np.full(L, n), np.full(L, z), heights=z == 0)

    @property
    def L(self) -> int:
        return self.n.size

    def copy(self) -> "BrickState":
        return replace(self, n=self.n.copy(), z=self.z.copy(), h=self.h.copy(), s=self.s.copy())

    def height_defect(self) -> np.ndarray:
        """``z_j - (h_{j-1} - h_j)``; zero when heights are consistent with slopes."""
        return self.z - (np.roll(self.h, 1) - self.h)

    def invariants(self) -> tuple[int, int, bytes]:
        """``(sum n, sum z, parity bits)``, compared exactly across a run."""
        return int(self.n.sum()), int(self.z.sum()), ((self.n + self.z) % 2).tobytes()

    def site_rates(self, rf: RateFunction) -> tuple[np.ndarray, np.ndarray]:
        """Per-site right and left jump rates ``n r(z)``, ``n r(-z)``."""
        return self.n * rf.r(self.z), self.n * rf.r(-self.z)


def apply_move(st: BrickState, j: int, direction: int) -> None:
    """Apply ``Theta_{j+}`` (``direction=+1``) or ``Theta_{j-}`` (``-1``) in place."""
    L = st.L
    if st.n[j] < 1:
        raise ValueError(f"no particle at site {j}")
    k = (j + direction) % L
    st.n[j] -= 1
    st.n[k] += 1
    if direction > 0:
        st.z[j] -= 1
        st.z[k] += 1
        st.h[j] += 1
    else:
        st.z[j] += 1
        st.z[k] -= 1
        st.h[k] += 1


def kmc_step(st: BrickState, rf: RateFunction, rng) -> tuple[BrickState, float]:
    """One Gillespie event; returns a new state and the elapsed time.

    Plain numpy, O(L) per call.  :func:`simulate` is the fast path.
    """
    right, left = st.site_rates(rf)
    rates = np.concatenate([right, left])
    total = float(rates.sum())
    if not total > 0:
        raise FrozenState("total jump rate is zero")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    dt = rng.exponential(1.0 / total)
    e = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
    e = min(e, rates.size - 1)
    out = st.copy()
    j, direction = (e, 1) if e < st.L else (e - st.L, -1)
    apply_move(out, j, direction)
    out.time = st.time + dt
    return out, dt
