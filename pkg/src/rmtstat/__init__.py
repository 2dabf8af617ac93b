"""Simulation library for extreme-eigenvalue statistics of random matrices.

Builds Wigner, band, and sample-covariance ensembles with heavy-tailed or
Gaussian entries, computes their spectra, and statistically verifies the
limit laws of the largest eigenvalues: Poisson interval counts and Frechet
marginals in the heavy-tailed regime, a closed-form determinant functional
for Cauchy entries, and Tracy-Widom / semicircle / Marchenko-Pastur behavior
in the Gaussian contrast regime.
"""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .det_functional import (
    ComplexZ,
    McEstimate,
    det_stat,
    gaussian_integral_check,
    growth_condition_ok,
    limit_target,
    mc_expectation,
    poisson_side_quadrature,
    product_expectation_poisson,
)
from .ensembles import (
    GAUSSIAN,
    EnsembleSpec,
    RectMatrix,
    SymMatrix,
    build,
    count_independent_entries,
    gram,
)
from .experiments import Outcome, execute, run_experiment
from .pointproc import (
    CountsSample,
    GofReport,
    IntervalPartition,
    frechet_cdf_kth,
    intensity_measure,
    joint_count_test,
    ks_statistic,
    order_stat_coupling,
    row_dominance_diagnostic,
)
from .reference_laws import (
    EsdParams,
    TWTable,
    goe_rescale,
    johnstone_rescale,
    marchenko_pastur_cdf,
    marchenko_pastur_density,
    painleve2_solve,
    semicircle_cdf,
    semicircle_density,
    tw_table,
)
from .rng import Rng
from .spectra import (
    EigenConvergenceError,
    EigenResidualError,
    SpectrumResult,
    bn_divisor,
    eigh_full,
    rescale,
    top_k,
)
from .tails import (
    TailSpec,
    normalizer_bn,
    sample_array,
    sample_entry,
    tail_function,
    verify_bn_limit,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexZ",
    "ConfigError",
    "CountsSample",
    "EigenConvergenceError",
    "EigenResidualError",
    "EnsembleSpec",
    "EsdParams",
    "ExperimentConfig",
    "GAUSSIAN",
    "GofReport",
    "IntervalPartition",
    "McEstimate",
    "Outcome",
    "RectMatrix",
    "Rng",
    "SpectrumResult",
    "SymMatrix",
    "TWTable",
    "TailSpec",
    "bn_divisor",
    "build",
    "count_independent_entries",
    "det_stat",
    "eigh_full",
    "execute",
    "frechet_cdf_kth",
    "gaussian_integral_check",
    "goe_rescale",
    "gram",
    "growth_condition_ok",
    "intensity_measure",
    "johnstone_rescale",
    "joint_count_test",
    "ks_statistic",
    "limit_target",
    "load_config",
    "marchenko_pastur_cdf",
    "marchenko_pastur_density",
    "mc_expectation",
    "normalizer_bn",
    "order_stat_coupling",
    "painleve2_solve",
    "parse_config",
    "poisson_side_quadrature",
    "product_expectation_poisson",
    "rescale",
    "row_dominance_diagnostic",
    "run_experiment",
    "sample_array",
    "sample_entry",
    "semicircle_cdf",
    "semicircle_density",
    "tail_function",
    "top_k",
    "tw_table",
    "verify_bn_limit",
    "__version__",
]
