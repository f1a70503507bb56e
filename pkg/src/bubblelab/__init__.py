"""Numerical laboratory for multi-bubble blow-up in the critical
Lane-Emden system on model Riemannian manifolds.

The package solves the radial profile pair on R^N by two-sided shooting,
computes the energy constants of the profile, assembles cutoff bubbles on
spheres and flat tori, and verifies the small-epsilon expansion of the
reduced energy coefficient by coefficient.
"""
from ._version import __version__
from .hyperbola import (DecayRates, HyperbolaPoint, InvalidExponent, Regime,
                        classify_regime, decay_rates, hyperbola_point,
                        q_from_p, serrin_exponent, sobolev_exponent)
from .ground_state import (BracketNotFound, DecayCheck, GroundState,
                           NoConvergence, Normalization, PositivityLost,
                           SolverOptions, UnsupportedExponent, WindowTooShort,
                           load_ground_state, rescale, save_ground_state,
                           solve_ground_state, validate_decay)
from .constants import (BubbleConstants, DivergentTail, c1_c2,
                        compute_constants, log_slope_constant,
                        phi_coefficient, unit_sphere_area)
from .manifolds import (AreaRatioCheck, FlatTorus, ModelManifold, OutOfChart,
                        PeakConfiguration, SeparationTooSmall, Sphere,
                        area_ratio_check)
from .reduction import (ChartPotential, ConstantPotential, FinderOptions,
                        NoCriticalPointFound, NonpositivePhi,
                        NonpositiveScale, PotentialSpec, RadialPotential,
                        ReducedCriticalPoint, SeparationUnsatisfiable,
                        find_critical_points, optimal_t, peak_energy, phi,
                        psi_k)
from .expansion import (Bubble, ChartViolation, EnergyBreakdown, ExpansionFit,
                        KernelResidualReport, OverlappingSupports,
                        PotentialNotRadial, assemble_bubble, cutoff,
                        default_eps_grid, energy_terms, kernel_residual,
                        plot_fit, sweep_and_fit, validate_eps_grid)
from .config import (CONFIG_SCHEMA, ConfigError, RunConfig, config_hash,
                     load_config, merge_overrides, parse_config, save_config,
                     validate_config)
from .pipeline import (CACHE_ENV_VAR, RunReport, StageError,
                       cached_ground_state, run)

__all__ = [
    "__version__",
    # hyperbola
    "DecayRates", "HyperbolaPoint", "InvalidExponent", "Regime",
    "classify_regime", "decay_rates", "hyperbola_point", "q_from_p",
    "serrin_exponent", "sobolev_exponent",
    # ground state
    "BracketNotFound", "DecayCheck", "GroundState", "NoConvergence",
    "Normalization", "PositivityLost", "SolverOptions",
    "UnsupportedExponent", "WindowTooShort", "load_ground_state", "rescale",
    "save_ground_state", "solve_ground_state", "validate_decay",
    # constants
    "BubbleConstants", "DivergentTail", "c1_c2", "compute_constants",
    "log_slope_constant", "phi_coefficient", "unit_sphere_area",
    # manifolds
    "AreaRatioCheck", "FlatTorus", "ModelManifold", "OutOfChart",
    "PeakConfiguration", "SeparationTooSmall", "Sphere", "area_ratio_check",
    # reduction
    "ChartPotential", "ConstantPotential", "FinderOptions",
    "NoCriticalPointFound", "NonpositivePhi", "NonpositiveScale",
    "PotentialSpec", "RadialPotential", "ReducedCriticalPoint",
    "SeparationUnsatisfiable", "find_critical_points", "optimal_t",
    "peak_energy", "phi", "psi_k",
    # expansion
    "Bubble", "ChartViolation", "EnergyBreakdown", "ExpansionFit",
    "KernelResidualReport", "OverlappingSupports", "PotentialNotRadial",
    "assemble_bubble", "cutoff", "default_eps_grid", "energy_terms",
    "kernel_residual", "plot_fit", "sweep_and_fit", "validate_eps_grid",
    # config / pipeline
    "CONFIG_SCHEMA", "ConfigError", "RunConfig", "config_hash",
    "load_config", "merge_overrides", "parse_config", "save_config",
    "validate_config", "CACHE_ENV_VAR", "RunReport", "StageError",
    "cached_ground_state", "run",
]
