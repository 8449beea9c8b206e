"""Shared helpers for the test suite."""

import numpy as np

from cais.spd import SpdMatrix


def random_spd(rng: np.random.Generator, d: int, scale: float = 1.0) -> SpdMatrix:
    """A well-conditioned random SPD matrix: A A^T + d*I, rescaled."""
    a = rng.standard_normal((d, d))
    m = a @ a.T + d * np.eye(d)
    return SpdMatrix(scale * m / d)


def random_log_weights(
    rng: np.random.Generator, n: int, heavy: bool = True
) -> np.ndarray:
    """Heavy-tailed raw log-weights, the degenerate-weight regime."""
    if heavy:
        return rng.standard_cauchy(n) * 3.0
    return rng.standard_normal(n)
