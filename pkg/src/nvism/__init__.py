"""Inverse scattering for the zero-energy Novikov-Veselov equation.

Pipeline: conductivity-type initial data -> scattering transform t(k) ->
unimodular linear evolution -> D-bar inversion back to the potential, with a
check suite for the symmetries, decay bounds, and round-trip identities the
construction is supposed to satisfy.
"""

from .config import SolverConfig
from .grids import ComplexField, Grid2D, Potential, ScatteringData, make_grid
from .spectral import (
    dbar_inverse_z,
    dz_inverse_z,
    fd_dbar,
    fd_derivative,
    fd_laplacian,
    lp_norm,
    spectral_derivative,
)
from .cauchy import cauchy_transform
from .potentials import (
    ConductivityProfile,
    CutoffFamily,
    gamma_to_potential,
    gaussian_cutoff,
    lp_convergence_study,
    radial_bump_gamma,
    reconstruct_gamma_from_q,
)
from .faddeev import (
    CGOConvergenceError,
    CGOSolution,
    SupportError,
    faddeev_convolve,
    scattering_grid,
    scattering_transform,
    schrodinger_residual,
    solve_cgo,
)
from .evolution import EvolutionParams, compose_evolution, evolution_multiplier, evolve
from .dbar import (
    DbarConvergenceError,
    DbarSolution,
    DbarSolver,
    DbarSweep,
    dbar_equation_residual,
    dbar_sweep,
    mu_at_zero,
    reconstruct_q_conductivity,
    reconstruct_q_formula,
    solve_dbar,
)

__version__ = "0.1.0"

__all__ = [
    "SolverConfig",
    "ComplexField",
    "Grid2D",
    "Potential",
    "ScatteringData",
    "make_grid",
    "spectral_derivative",
    "dbar_inverse_z",
    "dz_inverse_z",
    "fd_derivative",
    "fd_dbar",
    "fd_laplacian",
    "lp_norm",
    "cauchy_transform",
    "radial_bump_gamma",
    "ConductivityProfile",
    "gamma_to_potential",
    "reconstruct_gamma_from_q",
    "gaussian_cutoff",
    "lp_convergence_study",
    "CutoffFamily",
    "faddeev_convolve",
    "solve_cgo",
    "scattering_transform",
    "scattering_grid",
    "schrodinger_residual",
    "CGOSolution",
    "CGOConvergenceError",
    "SupportError",
    "EvolutionParams",
    "evolution_multiplier",
    "evolve",
    "compose_evolution",
    "DbarSolver",
    "DbarSolution",
    "DbarSweep",
    "solve_dbar",
    "mu_at_zero",
    "dbar_equation_residual",
    "dbar_sweep",
    "reconstruct_q_formula",
    "reconstruct_q_conductivity",
    "DbarConvergenceError",
    "__version__",
]
