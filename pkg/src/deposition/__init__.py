"""Numerical laboratory for the deposition-model conservation laws

    rho_t + (rho u)_x = 0,    u_t + rho_x = 0,

and for the bricklayer particle system whose hydrodynamics they describe.
"""
from .characteristics import PhysState

__version__ = "0.1.0"

__all__ = ["PhysState", "__version__"]
