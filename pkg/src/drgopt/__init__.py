"""Derivative-free optimisation on Riemannian manifolds with discrete gradients.

The optimiser takes one scalar root solve per basis coordinate and never
increases the energy, whatever the time step.
"""

from .engine import (ConvergenceLog, SolverOptions, StepSchedule, StopRule, dissipation_audit,
                     itoh_abe_drg, itoh_abe_sweep, run)
from .errors import DrgError

__version__ = "0.1.0"

__all__ = ["ConvergenceLog", "DrgError", "SolverOptions", "StepSchedule", "StopRule",
           "dissipation_audit", "itoh_abe_drg", "itoh_abe_sweep", "run", "__version__"]
