"""Spectral Barron regularity of Coulomb eigenfunctions, checked numerically.

Radial momentum-space discretisations of the Coulomb convolution operator,
a hydrogen-like eigenvalue solver, Neumann-series reconstruction, seeded
Monte Carlo estimators for the N-electron operator, and a batch experiment
runner.
"""
from .errors import (
    ConvergenceError,
    DivergenceError,
    NoEigenvalueError,
    NotContractiveError,
    UndefinedRatioError,
)
from .montecarlo import MonteCarloConfig
from .multiparticle import (
    MolecularSystem,
    Nucleus,
    SeparableGaussianState,
    SpectralState,
    aggregate_bound_constant,
    apply_assembled_K,
    commutation_residual,
    fourier_of_potential_product_mc,
    pair_rotation_apply,
    phase_modulate,
)
from .riesz import (
    RieszParams,
    SpectralHandle,
    apply_K_monte_carlo,
    apply_K_radial,
    kappa,
    kappa_via_quadrature,
    kernel_bound_ratio,
    lemma23_ratio,
    riesz_gamma,
    riesz_identity_residual,
    sharpness_probe,
)
from .solver import (
    EigenResult,
    SolverConfig,
    apply_G,
    apply_T,
    barron_growth_profile,
    contraction_factor,
    eigen_solve,
    hardy_ratio,
    highpass,
    lowpass,
    neumann_highfreq_solve,
    t_lambda_bound_ratio,
)
from .spectral import (
    RadialGrid,
    RadialSpectralFunction,
    build_radial_grid,
    hydrogen_barron_norm_exact,
    hydrogen_ground_state_ft,
    weighted_l1_norm,
    weighted_l2_norm,
)

__version__ = "0.1.0"
