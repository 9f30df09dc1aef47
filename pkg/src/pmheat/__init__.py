"""Fourier-side (PM^k) heat-equation solver for singular inverse-square potentials."""

from .analysis import (
    AsymptoticSeries,
    StationaryPair,
    convergence_experiment,
    equivalence_probe,
    positivity_check,
    self_similarity_residual,
    semigroup_gap,
    stationarity_residual,
    stationary_pair,
)
from .cartesian import BoxGrid, Snapshot, crosscheck, evolve, parity_parts, symmetry_defect
from .errors import (
    AccuracyWarning,
    DomainError,
    GridEdgeWarning,
    NonConvergenceError,
    PMHeatError,
    RefusalError,
    ShapeError,
    SingularityError,
)
from .picard import (
    SolveReport,
    TimeGrid,
    Trajectory,
    continuous_dependence_check,
    contraction_factor,
    duhamel_apply,
    heat_flow,
    picard_solve,
)
from .potentials import PotentialSpec, ThresholdReport, fourier_symbol, physical_value, pm_norm_bound, threshold_report
from .radial_convolution import RadialKernel, convolve_radial
from .special_functions import (
    beta_fn,
    constant_bundle,
    hardy_constant,
    homogeneous_ft_constant,
    lambda_star,
    log_gamma,
    nu,
    optimal_k,
    riesz_composition_constant,
)
from .spectral_field import (
    RadialGrid,
    SpectralField,
    apply_heat_semigroup,
    inverse_radial_transform,
    make_gaussian_field,
    make_power_law_field,
    pm_norm,
)

__version__ = "0.1.0"
