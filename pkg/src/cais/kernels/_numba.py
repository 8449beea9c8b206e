"""Numba-jitted implementations of the hot kernels.

Numerically equivalent to the numpy versions up to summation order; the two
backends agree to float tolerance, not bitwise.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def batch_mahalanobis_sq(diffs, chol):
    n, d = diffs.shape
    out = np.empty(n)
    y = np.empty(d)
    for i in range(n):
        acc = 0.0
        for j in range(d):
            s = diffs[i, j]
            for k in range(j):
                s -= chol[j, k] * y[k]
            yj = s / chol[j, j]
            y[j] = yj
            acc += yj * yj
        out[i] = acc
    return out


@njit(cache=True)
def weighted_scatter(samples, weights, center):
    n, d = samples.shape
    out = np.zeros((d, d))
    diff = np.empty(d)
    for i in range(n):
        w = weights[i]
        if w == 0.0:
            continue
        for j in range(d):
            diff[j] = samples[i, j] - center[j]
        for j in range(d):
            wdj = w * diff[j]
            for k in range(j + 1):
                out[j, k] += wdj * diff[k]
    for j in range(d):
        for k in range(j):
            out[k, j] = out[j, k]
    return out


@njit(cache=True)
def log_sum_exp(log_values):
    m = log_values[0]
    for i in range(1, log_values.shape[0]):
        if log_values[i] > m:
            m = log_values[i]
    if m == -np.inf:
        return -np.inf
    acc = 0.0
    for i in range(log_values.shape[0]):
        acc += np.exp(log_values[i] - m)
    return m + np.log(acc)


@njit(cache=True)
def sum_sq(values):
    # Kahan-Babuska compensated summation: error stays O(eps) in N.
    total = 0.0
    comp = 0.0
    for i in range(values.shape[0]):
        v = values[i] * values[i]
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


@njit(cache=True)
def normalized_from_log(log_weights):
    n = log_weights.shape[0]
    m = log_weights[0]
    for i in range(1, n):
        if log_weights[i] > m:
            m = log_weights[i]
    out = np.empty(n)
    total = 0.0
    for i in range(n):
        v = np.exp(log_weights[i] - m)
        out[i] = v
        total += v
    for i in range(n):
        out[i] /= total
    return out
