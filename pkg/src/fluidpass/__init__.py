"""First-passage time distributions of Markov-modulated fluid queues.

Submodules
----------
model       validated model container and derived quantities
mesh        space and time grids, CFL step
upwind1     first-order upwind operator (sparse)
limiter3    Koren flux-limited right-hand side
timestep    RK4, RK3b, BDF2 and a matrix-exponential reference
lst         transform solution and Abate-Whitt inversion
montecarlo  exact-event simulation and empirical CDFs
cli         ``fluidpass`` command line tool
"""
from .errors import FluidPassError
from .model import FluidModel, drift, stationary, validate

__version__ = "0.1.0"
__all__ = ["FluidModel", "FluidPassError", "drift", "stationary", "validate", "__version__"]
