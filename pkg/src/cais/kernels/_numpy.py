"""Pure-numpy reference implementations of the hot kernels."""

import math

import numpy as np
from scipy.linalg import solve_triangular


def batch_mahalanobis_sq(diffs, chol):
    """Squared Mahalanobis norm of each row of ``diffs`` given lower factor L."""
    y = solve_triangular(chol, diffs.T, lower=True, check_finite=False)
    return np.einsum("dn,dn->n", y, y)


def weighted_scatter(samples, weights, center):
    """sum_n w_n (x_n - c)(x_n - c)^T; not symmetrized."""
    diffs = samples - center
    return (diffs * weights[:, None]).T @ diffs


def log_sum_exp(log_values):
    """Max-shifted log-sum-exp; returns -inf when all entries are -inf."""
    m = np.max(log_values)
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.sum(np.exp(log_values - m))))


def normalized_from_log(log_weights):
    """Softmax of log-weights; caller guarantees at least one finite entry."""
    w = np.exp(log_weights - np.max(log_weights))
    return w / w.sum()


def sum_sq(values):
    """Exactly rounded sum of squares (plain dot drifts ~N*eps, which is
    visible in ESS at N ~ 1e5)."""
    return math.fsum(np.square(values))
