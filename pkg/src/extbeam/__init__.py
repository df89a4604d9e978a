"""Spectral-Galerkin toolkit for an extensible beam on a viscoelastic foundation."""

__version__ = "0.1.0"

from .modal import (BeamParams, ModalState, SpectralConfig, lambda_n, mu_n,
                    modal_norm_sq, l2_inner, project_load, poincare_check)
from .stability import (StabilityClass, StabilityVerdict, bar_beta, beta_c,
                        classify, n_k_index, nu, stability_map)
from .statics import (ForcedStaticSolution, ResonantContinuum, StationaryBranch,
                      StationarySet, bifurcation_sweep, enumerate_stationary,
                      is_resonant, n_star, solve_static_forced, static_residual)
from .dynamics import (BasinOutcome, DecayEstimate, EnergyRecord, IntegratorConfig,
                       IntegrationError, Trajectory, absorbing_check, basin_classify,
                       decay_rate, dissipation_check, energy_ledger, integrate,
                       integrate_ensemble, random_state, reference_integrate, rhs)

__all__ = [
    "BeamParams", "ModalState", "SpectralConfig", "lambda_n", "mu_n",
    "modal_norm_sq", "l2_inner", "project_load", "poincare_check",
    "StabilityClass", "StabilityVerdict", "bar_beta", "beta_c", "classify",
    "n_k_index", "nu", "stability_map",
    "ForcedStaticSolution", "ResonantContinuum", "StationaryBranch",
    "StationarySet", "bifurcation_sweep", "enumerate_stationary", "is_resonant",
    "n_star", "solve_static_forced", "static_residual",
    "BasinOutcome", "DecayEstimate", "EnergyRecord", "IntegratorConfig",
    "IntegrationError", "Trajectory", "absorbing_check", "basin_classify",
    "decay_rate", "dissipation_check", "energy_ledger", "integrate",
    "integrate_ensemble", "random_state", "reference_integrate", "rhs",
]
