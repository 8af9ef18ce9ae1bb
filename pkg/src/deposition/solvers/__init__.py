"""Finite-difference and finite-volume evolution of the deposition system."""
from .evolve import SchemeConfig, evolve, field_diagnostics, monitor_extrema
from .grid import Boundary, Field1D, GridSpec, HeightField, Trajectory
from .measure import (height_consistency, height_from_slope, l1_distance, locate_jump,
                      measure_shock_speed, pde_residual, reconstruct_height, resample,
                      resample_height, rescale, rescale_height, scaled_grid)
from .schemes import (DEFAULT_CFL, DEPOSITION, DepositionFlux, Scheme, flux, hll_face_flux,
                      max_speed, stable_dt, step_inviscid, step_viscous)

__all__ = [
    "Boundary", "DEFAULT_CFL", "DEPOSITION", "DepositionFlux", "Field1D", "GridSpec",
    "HeightField", "Scheme", "SchemeConfig", "Trajectory", "evolve", "field_diagnostics",
    "flux", "height_consistency", "height_from_slope", "hll_face_flux", "l1_distance",
    "locate_jump", "max_speed", "measure_shock_speed", "monitor_extrema", "pde_residual",
    "reconstruct_height", "resample", "resample_height", "rescale", "rescale_height", "scaled_grid", "stable_dt",
    "step_inviscid", "step_viscous",
]
