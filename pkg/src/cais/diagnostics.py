"""Estimators and metrics: self-normalized estimates, Z-hat, Gaussian KL,
MSE against ground truth, and eigenvalue spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .spd import SpdMatrix, eigen_spectrum, log_det
from .weighting import normalize


@dataclass(frozen=True)
class MetricRecord:
    """One (run, iteration, component) row of diagnostics.

    ``ess`` is the pre-transform batch ESS; ``kl_to_target`` is filled
    only for Gaussian targets with ground truth. ``jitter`` above
    ``jitter0`` (or a failed repair) marks a repair event.
    """

    iteration: int
    component: int
    ess: float
    branch: str
    min_eig: float
    max_eig: float
    run_id: Optional[int] = None
    gamma: Optional[float] = None
    transformed_ess: Optional[float] = None
    kl_to_target: Optional[float] = None
    mse_mean: Optional[float] = None
    z_hat: Optional[float] = None
    jitter: float = 0.0
    jitter0: float = 0.0
    repair_failed: bool = False
    degenerate: bool = False
    gamma_capped: bool = False

    @property
    def repair_event(self) -> bool:
        """True when the update needed more than the base jitter rung."""
        return self.repair_failed or self.jitter > self.jitter0


def self_normalized_estimate(
    samples: np.ndarray,
    log_weights: np.ndarray,
    g: Callable[[np.ndarray], np.ndarray] = lambda x: x,
) -> np.ndarray:
    """sum_n w_bar_n g(x_n) with one global softmax over all pairs.

    ``g`` maps an (M, d) batch to (M,) or (M, k) values; the default is
    the identity, giving the target-mean estimate.

    Raises
    ------
    AllWeightsZeroError
        When no weight is finite (no usable pair).
    """
    w = normalize(np.asarray(log_weights, dtype=float))
    values = np.asarray(g(np.asarray(samples, dtype=float)), dtype=float)
    if values.ndim == 1:
        return float(np.dot(w, values))
    return np.einsum("n,nk->k", w, values)


def z_estimate(log_weights: np.ndarray, n_total: int) -> float:
    """Normalizing-constant estimate (1/n_total) sum_n exp(log w_n).

    Returns 0.0 when every weight vanishes and inf when the average
    weight overflows double range (a blown-up run, reported honestly).
    """
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    lw = np.asarray(log_weights, dtype=float)
    lse = float(logsumexp(lw))
    if lse == -math.inf:
        return 0.0
    exponent = lse - math.log(n_total)
    try:
        return float(math.exp(exponent))
    except OverflowError:
        return math.inf


def kl_gaussians(
    mu0: np.ndarray, cov0: SpdMatrix, mu1: np.ndarray, cov1: SpdMatrix
) -> float:
    """KL( N(mu0, cov0) || N(mu1, cov1) ) in closed form via Cholesky solves."""
    mu0 = np.asarray(mu0, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    d = cov0.dim
    if cov1.dim != d or mu0.shape != (d,) or mu1.shape != (d,):
        raise ValueError("dimension mismatch between the two Gaussians")
    # tr(cov1^-1 cov0) = ||L1^-1 L0||_F^2 with L the lower factors.
    a = solve_triangular(cov1.chol, cov0.chol, lower=True, check_finite=False)
    trace = float(np.sum(a * a))
    y = solve_triangular(cov1.chol, mu1 - mu0, lower=True, check_finite=False)
    maha = float(np.dot(y, y))
    return 0.5 * (trace + maha - d + log_det(cov1) - log_det(cov0))


def mse_of_mean(estimates, truth: np.ndarray) -> float:
    """Mean over runs of the squared Euclidean error of the mean estimate."""
    truth = np.asarray(truth, dtype=float)
    errs = [float(np.sum((np.asarray(e, dtype=float) - truth) ** 2)) for e in estimates]
    if not errs:
        raise ValueError("estimates must be nonempty")
    return float(np.mean(errs))


def spectrum_report(
    cov: SpdMatrix, reference: SpdMatrix
) -> tuple[np.ndarray, np.ndarray]:
    """Paired eigenvalue spectra, both sorted descending."""
    if cov.dim != reference.dim:
        raise ValueError("dimension mismatch")
    return eigen_spectrum(cov), eigen_spectrum(reference)
