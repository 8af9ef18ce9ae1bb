"""Stochastic bricklayer: particles on a ring laying bricks as they hop."""
from .gibbs import (GibbsParams, PartitionValues, gibbs_expectations, partition_function,
                    partition_moments, sample_gibbs, sample_sites, site_pmf, z_cutoff)
from .observables import (FluxEstimate, empirical_marginal, estimate_flux, total_variation,
                          two_site_balance_residual)
from .rates import RateFunction, rate
from .simulate import SimulationResult, simulate
from .state import BrickState, apply_move, kmc_step

__all__ = [
    "BrickState", "FluxEstimate", "GibbsParams", "PartitionValues", "RateFunction",
    "SimulationResult", "apply_move", "empirical_marginal", "estimate_flux",
    "gibbs_expectations", "kmc_step", "partition_function", "partition_moments", "rate",
    "sample_gibbs", "sample_sites", "simulate", "site_pmf", "total_variation",
    "two_site_balance_residual", "z_cutoff",
]
