"""Adaptive importance sampling with ESS-gated covariance updates.

The sampler family here keeps Gaussian proposal covariances positive
definite by estimating them from nonlinearly transformed importance
weights (clipping or tempering) whenever the per-proposal effective
sample size drops below a threshold, while always adapting means with
the untransformed weights. Includes plain-AIS and clipped-weights
baselines, diagnostics, and a config-driven experiment harness.
"""

__version__ = "0.1.0"

from .adaptation import (
    AdaptationConfig,
    AdaptationReport,
    ProposalComponent,
    adapt_component,
    ml_covariance,
    weighted_covariance,
    weighted_mean,
)
from .diagnostics import (
    MetricRecord,
    kl_gaussians,
    mse_of_mean,
    self_normalized_estimate,
    spectrum_report,
    z_estimate,
)
from .distributions import (
    GaussianMixtureSpec,
    TargetModel,
    TargetTruth,
    make_example1_target,
    make_example2_target,
    make_gaussian_target,
    make_mixture_target,
    mixture_log_pdf,
    mixture_mean,
    mvn_log_pdf,
    mvn_sample,
    wishart_sample,
)
from .errors import (
    AllWeightsZeroError,
    BudgetExceededError,
    CaisError,
    GammaUnreachableError,
    InvalidConstraintError,
    NotPositiveDefiniteError,
    ParseError,
    RepairFailedError,
)
from .harness import (
    ExperimentSpec,
    SuiteResult,
    compute_suite,
    make_target,
    parse_spec,
    read_config_text,
    resolve_spec,
    run_replicate,
    run_suite,
    sweep,
)
from .rng import SeedStreams, stream, target_rng
from .samplers import (
    SamplerOutput,
    basic_ais_run,
    cais_run,
    init_population,
    npmc_baseline_run,
)
from .spd import (
    SpdMatrix,
    cholesky,
    eigen_spectrum,
    log_det,
    mahalanobis_sq,
    mahalanobis_sq_batch,
    repair_to_spd,
)
from .weighting import (
    GAMMA_CAP,
    WeightedBatch,
    clip_weights,
    compute_log_weights,
    default_gamma_eps,
    ess,
    find_gamma,
    make_batch,
    normalize,
    temper_weights,
)

__all__ = [
    "__version__",
    "AdaptationConfig",
    "AdaptationReport",
    "ProposalComponent",
    "adapt_component",
    "ml_covariance",
    "weighted_covariance",
    "weighted_mean",
    "MetricRecord",
    "kl_gaussians",
    "mse_of_mean",
    "self_normalized_estimate",
    "spectrum_report",
    "z_estimate",
    "GaussianMixtureSpec",
    "TargetModel",
    "TargetTruth",
    "make_example1_target",
    "make_example2_target",
    "make_gaussian_target",
    "make_mixture_target",
    "mixture_log_pdf",
    "mixture_mean",
    "mvn_log_pdf",
    "mvn_sample",
    "wishart_sample",
    "AllWeightsZeroError",
    "BudgetExceededError",
    "CaisError",
    "GammaUnreachableError",
    "InvalidConstraintError",
    "NotPositiveDefiniteError",
    "ParseError",
    "RepairFailedError",
    "ExperimentSpec",
    "SuiteResult",
    "compute_suite",
    "make_target",
    "parse_spec",
    "read_config_text",
    "resolve_spec",
    "run_replicate",
    "run_suite",
    "sweep",
    "SeedStreams",
    "stream",
    "target_rng",
    "SamplerOutput",
    "basic_ais_run",
    "cais_run",
    "init_population",
    "npmc_baseline_run",
    "SpdMatrix",
    "cholesky",
    "eigen_spectrum",
    "log_det",
    "mahalanobis_sq",
    "mahalanobis_sq_batch",
    "repair_to_spd",
    "GAMMA_CAP",
    "WeightedBatch",
    "clip_weights",
    "compute_log_weights",
    "default_gamma_eps",
    "ess",
    "find_gamma",
    "make_batch",
    "normalize",
    "temper_weights",
]
