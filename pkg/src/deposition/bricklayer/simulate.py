"""Fast Gillespie simulation with a binary rate tree.

The jitted kernel consumes uniforms handed over in chunks from a numpy
``Generator``, so a run is fully determined by the generator's seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import OutOfRange
from .rates import RateFunction
from .state import BrickState

_DONE, _NEED_UNIFORMS, _FROZEN, _OUT_OF_RANGE = 0, 1, 2, 3
CHUNK = 1 << 16


@numba.njit(cache=True)
def _leaf_rate(n, z, rtab, k):
    if z > k or z < -k:
        return -1.0
    return n * (rtab[z + k] + rtab[k - z])


@numba.njit(cache=True)
def _set_leaf(tree, P, j, a):
    i = P + j
    tree[i] = a
    i //= 2
    while i >= 1:
        tree[i] = tree[2 * i] + tree[2 * i + 1]
        i //= 2


@numba.njit(cache=True)
def _build(tree, P, n, z, rtab, k):
    tree[:] = 0.0
    for j in range(n.size):
        a = _leaf_rate(n[j], z[j], rtab, k)
        if a < 0:
            return False
        tree[P + j] = a
    for i in range(P - 1, 0, -1):
        tree[i] = tree[2 * i] + tree[2 * i + 1]
    return True


@numba.njit(cache=True)
def _directional_sums(n, z, rtab, k):
    right = 0.0
    left = 0.0
    for j in range(n.size):
        if n[j] > 0:
            right += n[j] * rtab[z[j] + k]
            left += n[j] * rtab[k - z[j]]
    return right, left


@numba.njit(cache=True)
def _run(n, z, h, tree, P, rtab, k, clock, t_stop, uni, pos, counts, integrals):
    """Advance until ``t_stop`` or until uniforms run out.

    ``clock[0]`` holds the time, ``counts`` the right/left jump totals and
    ``integrals`` the time integrals of ``sum n r(z)`` and ``sum n r(-z)``.
    Returns ``(status, pos)``.
    """
    L = n.size
    right, left = _directional_sums(n, z, rtab, k)
    t = clock[0]
    while True:
        total = tree[1]
        if total <= 0.0:
            integrals[0] += right * (t_stop - t)
            integrals[1] += left * (t_stop - t)
            clock[0] = t_stop
            return _FROZEN, pos
        if pos + 2 > uni.size:
            clock[0] = t
            return _NEED_UNIFORMS, pos
        dt = -np.log1p(-uni[pos]) / total
        if t + dt >= t_stop:
            # memoryless: the unused waiting time is discarded
            integrals[0] += right * (t_stop - t)
            integrals[1] += left * (t_stop - t)
            clock[0] = t_stop
            return _DONE, pos + 1
        integrals[0] += right * dt
        integrals[1] += left * dt
        t += dt
        target = uni[pos + 1] * total
        pos += 2
        i = 1
        while i < P:
            if target < tree[2 * i] or tree[2 * i + 1] <= 0.0:
                i = 2 * i
            else:
                target -= tree[2 * i]
                i = 2 * i + 1
        j = i - P
        a = j
        b = (j + 1) % L
        c = (j - 1) % L
        ns = 3 if c != b else 2
        for idx in range(ns):
            q = a if idx == 0 else (b if idx == 1 else c)
            right -= n[q] * rtab[z[q] + k]
            left -= n[q] * rtab[k - z[q]]
        if target < n[j] * rtab[z[j] + k]:
            n[j] -= 1
            z[j] -= 1
            n[b] += 1
            z[b] += 1
            h[j] += 1
            counts[0] += 1
        else:
            n[j] -= 1
            z[j] += 1
            n[c] += 1
            z[c] -= 1
            h[c] += 1
            counts[1] += 1
        for idx in range(ns):
            q = a if idx == 0 else (b if idx == 1 else c)
            rate = _leaf_rate(n[q], z[q], rtab, k)
            if rate < 0:
                clock[0] = t
                return _OUT_OF_RANGE, pos
            _set_leaf(tree, P, q, rate)
            right += n[q] * rtab[z[q] + k]
            left += n[q] * rtab[k - z[q]]


@dataclass
class SimulationResult:
    """Snapshots at the recorded times plus jump counts and rate integrals.

    ``flux_integrals[i]`` is ``int_0^t sum_j n_j r(+-z_j) ds`` at record time
    ``i``; ``jumps[i]`` counts right and left jumps up to that time.
    """

    times: np.ndarray
    n: list = field(default_factory=list)
    z: list = field(default_factory=list)
    h: list = field(default_factory=list)
    jumps: np.ndarray | None = None
    flux_integrals: np.ndarray | None = None
    final: BrickState | None = None
    L: int = 0

    @property
    def events(self) -> int:
        return int(self.jumps[-1].sum())

    def height_growth_rate(self) -> float:
        """Bricks laid per edge per unit time over the whole run."""
        t = self.times[-1] - self.times[0]
        return float((self.jumps[-1].sum() - self.jumps[0].sum()) / (self.L * t))

    def time_averaged_flux(self) -> tuple[float, float]:
        """``(1 / (L t)) int sum_j n_j r(+-z_j)`` over the run."""
        t = self.times[-1] - self.times[0]
        d = self.flux_integrals[-1] - self.flux_integrals[0]
        return float(d[0] / (self.L * t)), float(d[1] / (self.L * t))


def simulate(st0: BrickState, rf: RateFunction, t_end: float, record_times=None,
             rng=None, fields=("n", "z", "h"), chunk: int = CHUNK) -> SimulationResult:
    """Run the jump process from ``st0`` up to ``t_end``.

    ``record_times`` (default: start and end) must lie in ``[st0.time, t_end]``.
    An empty lattice simply idles; the observables stay constant.
    """
    if not t_end > st0.time:
        raise ValueError("t_end must exceed the initial time")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if record_times is None:
        record_times = [st0.time, t_end]
    rec = np.asarray(sorted(float(t) for t in record_times), dtype=float)
    if rec.size == 0 or rec[0] < st0.time or rec[-1] > t_end:
        raise ValueError("record times must lie within the run")
    if rec[-1] < t_end:
        rec = np.append(rec, t_end)

    st = st0.copy()
    rtab = rf.lookup()
    k = rtab.size // 2
    L = st.L
    P = 1
    while P < L:
        P *= 2
    tree = np.zeros(2 * P)
    if not _build(tree, P, st.n, st.z, rtab, k):
        raise OutOfRange(f"initial slope exceeds the rate table range {k}")
    clock = np.array([st.time])
    counts = np.zeros(2, dtype=np.int64)
    integrals = np.zeros(2)
    out = SimulationResult(times=rec, L=L)
    jumps, fint = [], []
    uni = rng.random(chunk)
    pos = 0
    for t_rec in rec:
        while clock[0] < t_rec:
            status, pos = _run(st.n, st.z, st.h, tree, P, rtab, k, clock, t_rec, uni, pos, counts, integrals)
            if status == _NEED_UNIFORMS:
                uni = rng.random(chunk)
                pos = 0
            elif status == _OUT_OF_RANGE:
                raise OutOfRange(f"a slope left the rate table range {k}")
        for name in fields:
            getattr(out, name).append(getattr(st, name).copy())
        jumps.append(counts.copy())
        fint.append(integrals.copy())
    st.time = float(clock[0])
    out.jumps = np.array(jumps)
    out.flux_integrals = np.array(fint)
    out.final = st
    return out
