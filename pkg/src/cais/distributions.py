"""Gaussian and Gaussian-mixture densities, sampling, and synthetic targets.

Every evaluator here accepts a single point of shape (d,) or a batch of
shape (N, d) and returns a scalar or an (N,) vector accordingly. Target
log-densities may return -inf where the density vanishes but never NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .spd import SpdMatrix, mahalanobis_sq_batch, log_det

LOG_2PI = math.log(2.0 * math.pi)

MIXTURE_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class TargetTruth:
    """Analytic ground truth carried by synthetic targets.

    ``z`` is the normalizing constant of the density exposed by the
    owning TargetModel (1.0 when that density is already normalized).
    ``cov`` is the true covariance when available.
    """

    mean: np.ndarray
    cov: Optional[SpdMatrix]
    z: float
    mixture: Optional["GaussianMixtureSpec"] = None


@dataclass(frozen=True)
class TargetModel:
    """A target density: dimension plus a vectorized log-density callable."""

    dim: int
    log_density: Callable[[np.ndarray], np.ndarray]
    truth: Optional[TargetTruth] = None


@dataclass
class GaussianMixtureSpec:
    """Finite Gaussian mixture: positive weights summing to one.

    All components must share one dimension; violations raise ValueError
    at construction so downstream code never sees a malformed mixture.
    """

    weights: np.ndarray
    means: list
    covs: list
    dim: int = field(init=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = [np.asarray(m, dtype=float) for m in self.means]
        k = len(self.weights)
        if k == 0 or len(self.means) != k or len(self.covs) != k:
            raise ValueError("weights, means, covs must have equal nonzero length")
        if (self.weights <= 0).any():
            raise ValueError("mixture weights must be positive")
        total = float(self.weights.sum())
        if abs(total - 1.0) > MIXTURE_WEIGHT_TOL:
            raise ValueError(f"mixture weights sum to {total!r}, expected 1")
        d = self.means[0].shape[0]
        for m in self.means:
            if m.shape != (d,):
                raise ValueError("mixture means must share one dimension")
        for c in self.covs:
            if not isinstance(c, SpdMatrix) or c.dim != d:
                raise ValueError("mixture covs must be SpdMatrix of matching dim")
        self.dim = d


def _as_batch(x: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape != (dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({dim},)")
        return x.reshape(1, dim), True
    if x.ndim == 2 and x.shape[1] == dim:
        return x, False
    raise ValueError(f"batch has shape {x.shape}, expected (N, {dim})")


def mvn_log_pdf(x: np.ndarray, mu: np.ndarray, cov: SpdMatrix):
    """Normalized Gaussian log-density at one point or a batch of points.

    Returns -(d/2) log(2 pi) - (1/2) log det(cov) - (1/2) maha^2.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (cov.dim,):
        raise ValueError(f"mean has shape {mu.shape}, expected ({cov.dim},)")
    batch, single = _as_batch(x, cov.dim)
    maha = mahalanobis_sq_batch(batch, mu, cov)
    out = -0.5 * (cov.dim * LOG_2PI + log_det(cov) + maha)
    return float(out[0]) if single else out


def mvn_sample(
    rng: np.random.Generator, mu: np.ndarray, cov: SpdMatrix, n: int
) -> np.ndarray:
    """Draw n rows of mu + L z with z standard normal, L = cov.chol."""
    if n < 1:
        raise ValueError("n must be >= 1")
    mu = np.asarray(mu, dtype=float)
    z = rng.standard_normal((n, cov.dim))
    return mu + z @ cov.chol.T


def mixture_log_pdf(x: np.ndarray, spec: GaussianMixtureSpec):
    """log sum_k w_k N(x; nu_k, Lambda_k), stable via log-sum-exp."""
    batch, single = _as_batch(x, spec.dim)
    parts = np.empty((len(spec.weights), batch.shape[0]))
    for k, (m, c) in enumerate(zip(spec.means, spec.covs)):
        parts[k] = mvn_log_pdf(batch, m, c)
    out = logsumexp(parts, axis=0, b=spec.weights[:, None])
    out = np.asarray(out, dtype=float)
    return float(out[0]) if single else out


def mixture_mean(spec: GaussianMixtureSpec) -> np.ndarray:
    """sum_k w_k nu_k."""
    return np.einsum("k,kd->d", spec.weights, np.stack(spec.means))


def mixture_covariance(spec: GaussianMixtureSpec) -> SpdMatrix:
    """Law-of-total-variance covariance of the mixture."""
    mbar = mixture_mean(spec)
    acc = np.zeros((spec.dim, spec.dim))
    for w, m, c in zip(spec.weights, spec.means, spec.covs):
        diff = m - mbar
        acc += w * (c.entries + np.outer(diff, diff))
    return SpdMatrix(acc)


def wishart_sample(
    rng: np.random.Generator, scale: SpdMatrix, dof: int
) -> SpdMatrix:
    """One Wishart(dof, scale) draw via the Bartlett construction.

    Builds lower-triangular A with sqrt(chi2(dof - i + 1)) diagonal
    (i = 1..d) and standard-normal entries below, then returns
    L A (L A)^T with L the factor of ``scale``. Draw order is fixed
    (diagonal chi-squares first, then subdiagonal normals row-major)
    so results are reproducible for a given generator state.
    """
    d = scale.dim
    if dof < d:
        raise ValueError(f"dof must be >= dimension ({dof} < {d})")
    dfs = float(dof) - np.arange(d, dtype=float)
    a = np.zeros((d, d))
    a[np.diag_indices(d)] = np.sqrt(rng.chisquare(dfs))
    rows, cols = np.tril_indices(d, -1)
    a[rows, cols] = rng.standard_normal(rows.size)
    return SpdMatrix.from_factor(scale.chol @ a)


def make_gaussian_target(mean: np.ndarray, cov: SpdMatrix) -> TargetModel:
    """Normalized Gaussian target with full truth record (z = 1)."""
    mean = np.asarray(mean, dtype=float)

    def log_density(x):
        return mvn_log_pdf(x, mean, cov)

    truth = TargetTruth(mean=mean, cov=cov, z=1.0)
    return TargetModel(dim=mean.shape[0], log_density=log_density, truth=truth)


def make_mixture_target(spec: GaussianMixtureSpec) -> TargetModel:
    """Normalized Gaussian-mixture target with truth mean/covariance."""

    def log_density(x):
        return mixture_log_pdf(x, spec)

    truth = TargetTruth(
        mean=mixture_mean(spec),
        cov=mixture_covariance(spec),
        z=1.0,
        mixture=spec,
    )
    return TargetModel(dim=spec.dim, log_density=log_density, truth=truth)


def _experiment_wishart_scale(dim: int) -> SpdMatrix:
    # dof = dim + 2 below, so identity/(dim + 2) gives E[draw] = identity.
    eye = np.eye(dim)
    factor = math.sqrt(1.0 / (dim + 2))
    return SpdMatrix(eye / (dim + 2), chol=factor * eye)


def make_example1_target(rng: np.random.Generator, dim: int = 10) -> TargetModel:
    """Unimodal Gaussian target: mean 10*ones, covariance one Wishart draw."""
    mean = np.full(dim, 10.0)
    cov = wishart_sample(rng, _experiment_wishart_scale(dim), dim + 2)
    return make_gaussian_target(mean, cov)


def make_example2_target(rng: np.random.Generator, dim: int = 10) -> TargetModel:
    """Three-component equal-weight mixture with Wishart-drawn covariances.

    Component means: 6*ones, -5*ones, and the symmetric ramp
    [1, 2, ..., dim/2, dim/2, ..., 2, 1] (the classic staircase at dim=10).
    """
    half = dim // 2
    ramp = np.concatenate(
        [np.arange(1, half + 1, dtype=float), np.arange(dim - half, 0, -1, dtype=float)]
    )
    means = [np.full(dim, 6.0), np.full(dim, -5.0), ramp]
    scale = _experiment_wishart_scale(dim)
    covs = [wishart_sample(rng, scale, dim + 2) for _ in range(3)]
    spec = GaussianMixtureSpec(weights=np.full(3, 1.0 / 3.0), means=means, covs=covs)
    return make_mixture_target(spec)
