"""Moment-matching proposal updates and the ESS-gated adaptation step.

One function, adapt_component, implements all three update rules used by
the samplers so that observed behavioral differences come from the rule
alone, never from divergent plumbing:

  direct      mean and covariance from untransformed weights (basic AIS;
              also the above-threshold branch of the gated rule)
  clip|temper gated rule: mean from untransformed weights always; when
              the batch ESS falls below n_t the covariance is estimated
              from transformed weights centered at the transformed mean
  npmc_clip   clipped weights drive BOTH mean and covariance (the
              contrast baseline)

Every covariance candidate passes through SPD repair before it replaces
the previous one, so a live proposal component is always factorizable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels, spd
from .errors import (
    AllWeightsZeroError,
    GammaUnreachableError,
    NotPositiveDefiniteError,
    RepairFailedError,
)
from .spd import SpdMatrix
from .weighting import (
    GAMMA_CAP,
    WeightedBatch,
    clip_weights,
    ess,
    find_gamma,
    normalize,
    temper_weights,
)

TRANSFORMS = ("direct", "clip", "temper", "npmc_clip")
MEAN_CENTERS = ("weighted_mean", "sampling_mean")
FALLBACKS = ("keep_previous", "repair")


@dataclass(frozen=True)
class ProposalComponent:
    """One Gaussian mixand of the proposal population."""

    mean: np.ndarray
    cov: SpdMatrix
    index: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.ndim != 1 or mean.shape[0] != self.cov.dim:
            raise ValueError("mean/cov dimension mismatch")
        if not np.isfinite(mean).all():
            raise ValueError("mean entries must be finite")
        object.__setattr__(self, "mean", mean)


@dataclass(frozen=True)
class AdaptationConfig:
    """Parameters of the adaptation rule.

    n_t is the ESS threshold; it must exceed the space dimension for the
    transformed-weight covariance to be full rank, and sit below N.
    """

    n_t: int
    transform: str = "temper"
    gamma_eps: float = 5.0
    mean_center: str = "weighted_mean"
    jitter0: Optional[float] = None
    fallback: str = "keep_previous"

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}")
        if self.mean_center not in MEAN_CENTERS:
            raise ValueError(f"mean_center must be one of {MEAN_CENTERS}")
        if self.fallback not in FALLBACKS:
            raise ValueError(f"fallback must be one of {FALLBACKS}")
        if self.gamma_eps <= 0:
            raise ValueError("gamma_eps must be positive")
        if self.jitter0 is not None and self.jitter0 <= 0:
            raise ValueError("jitter0 must be positive")


@dataclass(frozen=True)
class AdaptationReport:
    """What one adapt_component call did, for diagnostics and CSV rows."""

    ess: float
    branch: str
    gamma: Optional[float] = None
    transformed_ess: Optional[float] = None
    jitter: float = 0.0
    jitter0: float = 0.0
    repair_failed: bool = False
    degenerate: bool = False
    gamma_capped: bool = False


def weighted_mean(samples: np.ndarray, norm_weights: np.ndarray) -> np.ndarray:
    """sum_n w_n x_n for normalized weights."""
    return np.einsum("n,nd->d", norm_weights, samples)


def weighted_covariance(
    samples: np.ndarray, norm_weights: np.ndarray, center: np.ndarray
) -> np.ndarray:
    """sum_n w_n (x_n - center)(x_n - center)^T, exactly symmetrized.

    The result is symmetric PSD in exact arithmetic but may be singular
    or (through rounding) slightly indefinite; SPD repair happens later.
    """
    scatter = kernels.weighted_scatter(
        np.ascontiguousarray(samples, dtype=float),
        np.ascontiguousarray(norm_weights, dtype=float),
        np.ascontiguousarray(center, dtype=float),
    )
    return 0.5 * (scatter + scatter.T)


def ml_covariance(samples: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Unweighted ML covariance (1/M) sum (x - center)(x - center)^T."""
    samples = np.asarray(samples, dtype=float)
    m = samples.shape[0]
    diffs = samples - center
    scatter = diffs.T @ diffs / m
    return 0.5 * (scatter + scatter.T)


def _finish_covariance(
    candidate: np.ndarray, prev: ProposalComponent, cfg: AdaptationConfig
) -> tuple[SpdMatrix, float, float, bool]:
    """Repair the candidate to SPD; fall back per config when repair fails.

    Returns (cov, jitter_used, jitter0, repair_failed).
    """
    jitter0 = cfg.jitter0 if cfg.jitter0 is not None else spd.default_jitter(candidate)
    try:
        cov, lam = spd.repair_to_spd(candidate, jitter0)
        return cov, lam, jitter0, False
    except RepairFailedError:
        # A non-finite candidate cannot be rebuilt from its spectrum.
        if cfg.fallback == "keep_previous" or not np.isfinite(candidate).all():
            return prev.cov, 0.0, jitter0, True
        sym = 0.5 * (candidate + candidate.T)
        vals, vecs = np.linalg.eigh(sym)
        vals = np.maximum(vals, jitter0)
        rebuilt = (vecs * vals) @ vecs.T
        try:
            cov = SpdMatrix(0.5 * (rebuilt + rebuilt.T))
        except NotPositiveDefiniteError:
            return prev.cov, 0.0, jitter0, True
        return cov, float("nan"), jitter0, True


def adapt_component(
    batch: WeightedBatch, prev: ProposalComponent, cfg: AdaptationConfig
) -> tuple[ProposalComponent, AdaptationReport]:
    """One proposal-component update from one weighted batch.

    A degenerate batch (all weights zero) changes nothing and is only
    flagged. Otherwise the mean always moves; which weights drive the
    covariance depends on cfg.transform and, for the gated rules, on
    whether the batch ESS clears n_t.
    """
    n = batch.samples.shape[0]
    if not cfg.n_t < n:
        raise ValueError(f"n_t={cfg.n_t} must be below the batch size {n}")

    eta = ess(batch.norm_weights)
    if batch.degenerate:
        return prev, AdaptationReport(ess=eta, branch="skipped", degenerate=True)

    if cfg.transform == "npmc_clip":
        return _npmc_update(batch, prev, cfg, eta)

    next_mean = weighted_mean(batch.samples, batch.norm_weights)
    gated_direct = cfg.transform == "direct" or eta >= cfg.n_t

    if gated_direct:
        center = next_mean if cfg.mean_center == "weighted_mean" else prev.mean
        candidate = weighted_covariance(batch.samples, batch.norm_weights, center)
        cov, lam, j0, failed = _finish_covariance(candidate, prev, cfg)
        report = AdaptationReport(
            ess=eta, branch="direct", jitter=lam, jitter0=j0, repair_failed=failed
        )
        return ProposalComponent(next_mean, cov, prev.index), report

    gamma: Optional[float] = None
    capped = False
    if cfg.transform == "clip":
        transformed = clip_weights(batch.log_weights, cfg.n_t)
        branch = "clip"
    else:
        try:
            gamma = find_gamma(batch.log_weights, cfg.n_t, cfg.gamma_eps)
        except GammaUnreachableError:
            gamma = GAMMA_CAP
            capped = True
        transformed = temper_weights(batch.log_weights, gamma)
        branch = "temper"

    try:
        tw = normalize(transformed)
    except AllWeightsZeroError:
        report = AdaptationReport(
            ess=eta, branch=branch, gamma=gamma, degenerate=True, gamma_capped=capped
        )
        return ProposalComponent(next_mean, prev.cov, prev.index), report

    t_center = weighted_mean(batch.samples, tw)
    candidate = weighted_covariance(batch.samples, tw, t_center)
    cov, lam, j0, failed = _finish_covariance(candidate, prev, cfg)
    report = AdaptationReport(
        ess=eta,
        branch=branch,
        gamma=gamma,
        transformed_ess=ess(tw),
        jitter=lam,
        jitter0=j0,
        repair_failed=failed,
        gamma_capped=capped,
    )
    return ProposalComponent(next_mean, cov, prev.index), report


def _npmc_update(
    batch: WeightedBatch, prev: ProposalComponent, cfg: AdaptationConfig, eta: float
) -> tuple[ProposalComponent, AdaptationReport]:
    """Clipped weights drive both moments (the contrast baseline)."""
    transformed = clip_weights(batch.log_weights, cfg.n_t)
    try:
        tw = normalize(transformed)
    except AllWeightsZeroError:
        return prev, AdaptationReport(ess=eta, branch="clip", degenerate=True)

    next_mean = weighted_mean(batch.samples, tw)
    center = next_mean if cfg.mean_center == "weighted_mean" else prev.mean
    candidate = weighted_covariance(batch.samples, tw, center)
    cov, lam, j0, failed = _finish_covariance(candidate, prev, cfg)
    report = AdaptationReport(
        ess=eta,
        branch="clip",
        transformed_ess=ess(tw),
        jitter=lam,
        jitter0=j0,
        repair_failed=failed,
    )
    return ProposalComponent(next_mean, cov, prev.index), report
