"""Log-domain importance weights, ESS, and the two weight transforms.

Raw weights are never materialized: every operation works on log-weights,
with normalization done through a max-shifted log-sum-exp. A batch whose
weights all vanish (every log-weight -inf) is represented with uniform
normalized weights plus a ``degenerate`` flag instead of aborting the run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import AllWeightsZeroError, GammaUnreachableError

GAMMA_CAP = 2.0**60
MAX_BISECTIONS = 100


def default_gamma_eps(n: int) -> float:
    """ESS tolerance for the gamma search: max(1, 1% of the batch size)."""
    return max(1.0, 0.01 * n)


@dataclass(frozen=True)
class WeightedBatch:
    """Samples from one mixand at one iteration, with their weights.

    ``log_weights`` are raw (unnormalized) and may contain -inf.
    ``norm_weights`` is their softmax, or uniform when ``degenerate``.
    """

    samples: np.ndarray
    log_weights: np.ndarray
    norm_weights: np.ndarray
    proposal_index: int
    iteration: int
    degenerate: bool = False


def compute_log_weights(samples: np.ndarray, target, proposal) -> np.ndarray:
    """log pi(x_n) - log q(x_n; mu_d, Sigma_d) for each row of samples.

    ``proposal`` needs only ``mean`` and ``cov`` attributes; the density
    is the normalized Gaussian. -inf appears wherever pi vanishes.
    """
    from .distributions import mvn_log_pdf

    log_pi = np.asarray(target.log_density(samples), dtype=float)
    log_q = mvn_log_pdf(samples, proposal.mean, proposal.cov)
    return log_pi - log_q


def normalize(log_weights: np.ndarray) -> np.ndarray:
    """Softmax of log-weights; -inf entries map to exactly 0.

    Raises
    ------
    AllWeightsZeroError
        When every entry is -inf (the proposal missed the target's
        support entirely). Callers substitute uniform weights and flag
        the batch rather than aborting.
    """
    lw = np.asarray(log_weights, dtype=float)
    if not np.isfinite(lw).any():
        raise AllWeightsZeroError("every weight in the batch is zero")
    return kernels.normalized_from_log(lw)


def make_batch(
    samples: np.ndarray,
    log_weights: np.ndarray,
    proposal_index: int,
    iteration: int,
) -> WeightedBatch:
    """Bundle samples with weights, downgrading all-zero batches to uniform."""
    lw = np.asarray(log_weights, dtype=float)
    try:
        nw = normalize(lw)
        degenerate = False
    except AllWeightsZeroError:
        nw = np.full(lw.shape[0], 1.0 / lw.shape[0])
        degenerate = True
    return WeightedBatch(
        samples=samples,
        log_weights=lw,
        norm_weights=nw,
        proposal_index=proposal_index,
        iteration=iteration,
        degenerate=degenerate,
    )


def ess(norm_weights: np.ndarray) -> float:
    """Effective sample size 1 / sum(w_bar^2), in [1, N] for normalized w."""
    w = np.ascontiguousarray(norm_weights, dtype=float)
    return float(1.0 / kernels.sum_sq(w))


def clip_weights(log_weights: np.ndarray, n_t: int) -> np.ndarray:
    """Cap every log-weight at the n_t-th largest raw value.

    Ties at the threshold survive unclipped (min against their own value).
    The threshold may be -inf when fewer than n_t weights are nonzero; the
    result is then all--inf and normalization reports the degeneracy.
    """
    lw = np.asarray(log_weights, dtype=float)
    n = lw.shape[0]
    if not 1 < n_t < n:
        raise ValueError(f"n_t must lie strictly between 1 and N={n}, got {n_t}")
    threshold = np.partition(lw, n - n_t)[n - n_t]
    return np.minimum(lw, threshold)


def temper_weights(log_weights: np.ndarray, gamma: float) -> np.ndarray:
    """Raise raw weights to 1/gamma: divide log-weights by gamma."""
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    lw = np.asarray(log_weights, dtype=float)
    return lw / gamma


def _tempered_ess(lw: np.ndarray, gamma: float) -> float:
    return ess(normalize(temper_weights(lw, gamma)))


def find_gamma(log_weights: np.ndarray, n_t: int, eps: float) -> float:
    """Smallest examined gamma whose tempered ESS reaches n_t within eps.

    Doubling from 1 until the tempered ESS crosses n_t (capped at 2^60),
    then bisection until |ESS - n_t| <= eps or 100 halvings. Tempering
    flattens weights toward uniform-over-nonzero, so the reachable ESS
    supremum is the count of finite log-weights.

    Raises
    ------
    GammaUnreachableError
        When fewer than n_t log-weights are finite. The caller falls back
        to the cap gamma and flags the iteration.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    lw = np.asarray(log_weights, dtype=float)
    n = lw.shape[0]
    if not n_t < n:
        raise ValueError(f"n_t must be below N={n}, got {n_t}")
    n_finite = int(np.isfinite(lw).sum())
    if n_finite < n_t:
        raise GammaUnreachableError(
            f"only {n_finite} nonzero weights, tempered ESS cannot reach {n_t}"
        )

    if _tempered_ess(lw, 1.0) >= n_t:
        return 1.0

    lo = 1.0
    hi = 2.0
    while _tempered_ess(lw, hi) < n_t:
        if hi >= GAMMA_CAP:
            return GAMMA_CAP
        lo = hi
        hi = min(hi * 2.0, GAMMA_CAP)

    if abs(_tempered_ess(lw, hi) - n_t) <= eps:
        return hi
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        mid_ess = _tempered_ess(lw, mid)
        if abs(mid_ess - n_t) <= eps:
            return mid
        if mid_ess >= n_t:
            hi = mid
        else:
            lo = mid
    return hi
