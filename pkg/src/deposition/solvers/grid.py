"""Grid geometry and sampled fields."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from ..characteristics import DomainClass, domain_classify


class Boundary(str, enum.Enum):
    Periodic = "periodic"
    Outflow = "outflow"


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centred grid; cell ``j`` covers ``[x_min + j dx, x_min + (j+1) dx]``."""

    x_min: float
    dx: float
    n_cells: int
    boundary: Boundary = Boundary.Periodic

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if self.n_cells < 4:
            raise ValueError("need at least 4 cells")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @classmethod
    def uniform(cls, x_min: float, x_max: float, n_cells: int, boundary="periodic") -> "GridSpec":
        return cls(float(x_min), (float(x_max) - float(x_min)) / n_cells, int(n_cells), Boundary(boundary))

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.Periodic

    @property
    def length(self) -> float:
        return self.dx * self.n_cells

    @property
    def x_max(self) -> float:
        return self.x_min + self.length

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_cells + 1) * self.dx


@dataclass
class Field1D:
    """Cell values of ``(rho, u)`` at one time."""

    grid: GridSpec
    rho: np.ndarray
    u: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        n = self.grid.n_cells
        if self.rho.shape != (n,) or self.u.shape != (n,):
            raise ValueError(f"rho and u must have shape ({n},)")

    @classmethod
    def from_functions(cls, grid: GridSpec, rho0, u0, time: float = 0.0) -> "Field1D":
        x = grid.centers
        rho = np.broadcast_to(np.asarray(rho0(x) if callable(rho0) else rho0, float), x.shape)
        u = np.broadcast_to(np.asarray(u0(x) if callable(u0) else u0, float), x.shape)
        return cls(grid, rho.copy(), u.copy(), time)

    @classmethod
    def riemann(cls, grid: GridSpec, left, right, x0: float = 0.0, time: float = 0.0) -> "Field1D":
        x = grid.centers
        mask = x < x0
        rho = np.where(mask, float(left[0]), float(right[0]))
        u = np.where(mask, float(left[1]), float(right[1]))
        return cls(grid, rho, u, time)

    def copy(self) -> "Field1D":
        return replace(self, rho=self.rho.copy(), u=self.u.copy())

    def mass(self) -> float:
        return float(np.sum(self.rho) * self.grid.dx)

    def total_u(self) -> float:
        return float(np.sum(self.u) * self.grid.dx)

    def classify(self) -> list[DomainClass]:
        return [domain_classify(r, v) for r, v in zip(self.rho, self.u)]


@dataclass
class HeightField:
    """Deposition heights at the ``n_cells + 1`` cell faces."""

    grid: GridSpec
    h: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if self.h.shape != (self.grid.n_cells + 1,):
            raise ValueError("h lives on the n_cells + 1 faces")

    def slope(self) -> np.ndarray:
        """``-D_x h`` per cell, the discrete counterpart of ``u``."""
        return -np.diff(self.h) / self.grid.dx


@dataclass
class Trajectory:
    """Snapshots of an evolution plus per-snapshot diagnostic series."""

    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    steps: int = 0

    def append(self, f: Field1D, diag: dict) -> None:
        if self.times and not f.time > self.times[-1]:
            raise ValueError("snapshot times must increase strictly")
        self.times.append(f.time)
        self.fields.append(f)
        for key, value in diag.items():
            self.diagnostics.setdefault(key, []).append(value)

    def series(self, key: str) -> np.ndarray:
        return np.asarray(self.diagnostics[key], dtype=float)

    @property
    def final(self) -> Field1D:
        return self.fields[-1]

    def __len__(self) -> int:
        return len(self.fields)
