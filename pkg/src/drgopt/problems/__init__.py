from .rayleigh import RayleighProblem, kappa_delta, partial_sums, rayleigh_delta, rayleigh_energy
from .brockett import (BrockettProblem, brockett_delta, brockett_diag_error, brockett_energy,
                       givens_delta, optimal_energy, reference_spectrum)
from .tv import TVConfig, TVProblem, tv_energy, tv_local_delta
