"""Measurements on trajectories: shock tracking, scaling transforms, height
reconstruction and discrete residuals."""
from __future__ import annotations

import numpy as np

from ..errors import InconsistentInitialHeight, NoShockFound
from .grid import Field1D, GridSpec, HeightField, Trajectory
from .schemes import DEPOSITION


def locate_jump(f: Field1D, min_jump: float = 1e-3, half_window: int = 8) -> float:
    """Position of the dominant discontinuity in ``rho``.

    Takes the steepest cell-to-cell jump, then refines to the point where a
    linear interpolant crosses the mid level between the plateau values
    ``half_window`` cells to either side.
    """
    rho = f.rho
    d = np.diff(rho)
    i = int(np.argmax(np.abs(d)))
    if abs(d[i]) < min_jump:
        raise NoShockFound(f"largest jump {abs(d[i]):.3e} below threshold {min_jump:.3e}")
    lo = max(i - half_window, 0)
    hi = min(i + 1 + half_window, rho.size - 1)
    mid = 0.5 * (rho[lo] + rho[hi])
    x = f.grid.centers
    seg = rho[lo:hi + 1] - mid
    # crossing nearest to the steepest face
    cross = np.nonzero(np.sign(seg[:-1]) != np.sign(seg[1:]))[0]
    if cross.size == 0:
        return float(0.5 * (x[i] + x[i + 1]))
    k = cross[np.argmin(np.abs(cross + lo - i))]
    a, b = seg[k], seg[k + 1]
    frac = a / (a - b)
    return float(x[lo + k] + frac * f.grid.dx)


def measure_shock_speed(traj: Trajectory, min_jump: float = 1e-3, skip: int = 1,
                        half_window: int = 8) -> float:
    """Least-squares slope of jump position against time.

    The first ``skip`` snapshots are ignored while the discrete profile
    settles.
    """
    pts = [(f.time, locate_jump(f, min_jump, half_window)) for f in traj.fields[skip:]]
    if len(pts) < 2:
        if not traj.fields:
            raise NoShockFound("empty trajectory")
        locate_jump(traj.fields[-1], min_jump, half_window)
        raise NoShockFound("need at least two snapshots to fit a speed")
    t, x = np.array(pts).T
    slope, _ = np.polyfit(t, x, 1)
    return float(slope)


def resample(f: Field1D, grid: GridSpec) -> Field1D:
    """Linear interpolation of cell values onto another grid."""
    src = f.grid
    x = grid.centers
    xs = src.centers
    if src.periodic:
        period = src.length
        xw = src.x_min + np.mod(x - src.x_min, period)
        xs_ext = np.concatenate([[xs[-1] - period], xs, [xs[0] + period]])
        rho = np.interp(xw, xs_ext, np.concatenate([[f.rho[-1]], f.rho, [f.rho[0]]]))
        u = np.interp(xw, xs_ext, np.concatenate([[f.u[-1]], f.u, [f.u[0]]]))
    else:
        rho = np.interp(x, xs, f.rho)
        u = np.interp(x, xs, f.u)
    return Field1D(grid, rho, u, f.time)


def scaled_grid(grid: GridSpec, alpha: float, nu: float) -> GridSpec:
    s = alpha ** (-nu)
    return GridSpec(grid.x_min * s, grid.dx * s, grid.n_cells, grid.boundary)


def rescale(traj: Trajectory, alpha: float, nu: float, grid: GridSpec | None = None) -> Trajectory:
    """Apply ``rho -> a^(2(1-nu)) rho(a t, a^nu x)``, ``u -> a^(1-nu) u(a t, a^nu x)``.

    Snapshot ``k`` of the result sits at ``t_k / alpha`` on the grid
    ``x / alpha^nu``.  Passing ``grid`` resamples onto it by linear
    interpolation instead.  With ``nu = 2/3`` the total mass is invariant.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    c_rho = alpha ** (2.0 * (1.0 - nu))
    c_u = alpha ** (1.0 - nu)
    out = Trajectory()
    for f in traj.fields:
        g = scaled_grid(f.grid, alpha, nu)
        nf = Field1D(g, c_rho * f.rho, c_u * f.u, f.time / alpha)
        if grid is not None:
            nf = resample(nf, grid)
        out.times.append(nf.time)
        out.fields.append(nf)
    for key, vals in traj.diagnostics.items():
        out.diagnostics[key] = list(vals)
    out.steps = traj.steps
    return out


def rescale_height(hf: HeightField, alpha: float, nu: float) -> HeightField:
    """``h -> a^(1-2nu) h(a t, a^nu x)``, the height transform matching :func:`rescale`.

    It keeps ``u = -D_x h`` and ``h_t = rho`` intact; for ``nu = 2/3`` the
    prefactor is ``a^(-1/3)``.
    """
    g = scaled_grid(hf.grid, alpha, nu)
    return HeightField(g, alpha ** (1.0 - 2.0 * nu) * hf.h, hf.time / alpha)


def resample_height(hf: HeightField, grid: GridSpec) -> HeightField:
    """Linear interpolation of face heights onto the faces of ``grid``."""
    return HeightField(grid, np.interp(grid.nodes, hf.grid.nodes, hf.h), hf.time)


def _face_density(rho: np.ndarray, grid: GridSpec) -> np.ndarray:
    faces = np.empty(rho.size + 1)
    faces[1:-1] = 0.5 * (rho[:-1] + rho[1:])
    if grid.periodic:
        faces[0] = faces[-1] = 0.5 * (rho[0] + rho[-1])
    else:
        faces[0], faces[-1] = rho[0], rho[-1]
    return faces


def height_from_slope(f: Field1D, h_left: float = 0.0) -> HeightField:
    """Face heights with ``-D_x h = u`` exactly."""
    h = h_left - np.concatenate([[0.0], np.cumsum(f.u)]) * f.grid.dx
    return HeightField(f.grid, h, f.time)


def height_consistency(f: Field1D, hf: HeightField) -> float:
    """``max |u + D_x h|``."""
    return float(np.max(np.abs(f.u - hf.slope())))


def reconstruct_height(traj: Trajectory, h0: HeightField, tol: float | None = None) -> list[HeightField]:
    """Advance face heights with ``h_t = rho`` (trapezoidal rule between snapshots).

    ``h0`` must match the first snapshot's slopes to within ``tol``, by
    default ``dx (1 + max|u|)``.
    """
    f0 = traj.fields[0]
    if h0.grid != f0.grid:
        raise InconsistentInitialHeight("h0 lives on a different grid")
    if tol is None:
        tol = f0.grid.dx * (1.0 + float(np.max(np.abs(f0.u))))
    mismatch = height_consistency(f0, h0)
    if mismatch > tol:
        raise InconsistentInitialHeight(f"max|u + D_x h0| = {mismatch:.3e} > {tol:.3e}")
    out = [HeightField(h0.grid, h0.h.copy(), f0.time)]
    prev = _face_density(f0.rho, f0.grid)
    h = h0.h.copy()
    for f in traj.fields[1:]:
        cur = _face_density(f.rho, f.grid)
        h = h + 0.5 * (prev + cur) * (f.time - out[-1].time)
        out.append(HeightField(f.grid, h.copy(), f.time))
        prev = cur
    return out


def l1_distance(a: Field1D, b: Field1D) -> float:
    """``sum(|rho_a - rho_b| + |u_a - u_b|) dx`` on a shared grid."""
    if a.grid != b.grid:
        raise ValueError("fields must share a grid")
    return float(np.sum(np.abs(a.rho - b.rho) + np.abs(a.u - b.u)) * a.grid.dx)


def pde_residual(traj: Trajectory, model=DEPOSITION) -> np.ndarray:
    """L1 norms of ``D_t v + D_x J(v)`` at interior snapshots.

    Centred differences in time (between neighbouring snapshots) and space.
    Returns shape ``(n_snapshots - 2, 2)`` for the two equations.
    """
    fs = traj.fields
    if len(fs) < 3:
        raise ValueError("need at least three snapshots")
    out = []
    for k in range(1, len(fs) - 1):
        f = fs[k]
        g = f.grid
        dt = fs[k + 1].time - fs[k - 1].time
        j1, j2 = model.flux(f.rho, f.u)
        if g.periodic:
            dj1 = (np.roll(j1, -1) - np.roll(j1, 1)) / (2 * g.dx)
            dj2 = (np.roll(j2, -1) - np.roll(j2, 1)) / (2 * g.dx)
            sl = slice(None)
        else:
            dj1 = np.zeros_like(j1)
            dj2 = np.zeros_like(j2)
            dj1[1:-1] = (j1[2:] - j1[:-2]) / (2 * g.dx)
            dj2[1:-1] = (j2[2:] - j2[:-2]) / (2 * g.dx)
            sl = slice(1, -1)
        r1 = (fs[k + 1].rho - fs[k - 1].rho) / dt + dj1
        r2 = (fs[k + 1].u - fs[k - 1].u) / dt + dj2
        out.append((np.sum(np.abs(r1[sl])) * g.dx, np.sum(np.abs(r2[sl])) * g.dx))
    return np.asarray(out)

