"""Continuous-time moving averages driven by Lévy processes.

Integrability through triplet-induced Young functions, simulation on a
grid, recovery of the driving process, and Monte Carlo verification.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("ctma")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .kernels import (AnticipatingOUKernel, CarmaKernel, CustomKernel, GammaKernel, OUKernel,
                      fourier_numeric, integrability_rule, is_invertible, kernel_from_spec)
from .levy import (LevyMeasure, LevyTriplet, alpha_stable, compound_poisson, cumulant_psi,
                   gamma_subordinator, gaussian, integral_law, triplet_from_spec)
from .orlicz import (complementary_young, luxemburg_norm, membership, phi_integral,
                     young_psi, young_psi_p)
from .simulate import Grid, simulate_ctma, simulate_increments, simulate_ou_exact
from .invert import anticipating_recover, gamma_recover, gamma_to_ou, k_alpha, langevin_recover
from .verify import cf_agreement, density_residual, fubini_condition

__all__ = [
    "__version__",
    "AnticipatingOUKernel", "CarmaKernel", "CustomKernel", "GammaKernel", "OUKernel",
    "fourier_numeric", "integrability_rule", "is_invertible", "kernel_from_spec",
    "LevyMeasure", "LevyTriplet", "alpha_stable", "compound_poisson", "cumulant_psi",
    "gamma_subordinator", "gaussian", "integral_law", "triplet_from_spec",
    "complementary_young", "luxemburg_norm", "membership", "phi_integral",
    "young_psi", "young_psi_p",
    "Grid", "simulate_ctma", "simulate_increments", "simulate_ou_exact",
    "anticipating_recover", "gamma_recover", "gamma_to_ou", "k_alpha", "langevin_recover",
    "cf_agreement", "density_residual", "fubini_condition",
]
