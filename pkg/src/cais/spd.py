"""Dense symmetric-positive-definite matrix kernels.

Everything downstream (Gaussian densities, covariance updates, KL metrics)
goes through this module, so the invariants enforced here (symmetry, a
valid Cholesky factor, strictly positive eigenvalues) are what keeps the
samplers numerically alive. Dimensions are small (tens), so all storage is
dense row-major.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import NotPositiveDefiniteError, RepairFailedError

SYMMETRY_RTOL = 1e-12
REPAIR_MAX_DOUBLINGS = 60


def _check_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def _check_symmetric(m: np.ndarray) -> None:
    scale = 1.0 + np.max(np.abs(m)) if m.size else 1.0
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if not np.isfinite(scale) or asym > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"matrix is not symmetric to tolerance (max asymmetry {asym:.3e})"
        )


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T == m.

    Parameters
    ----------
    m : array, shape (d, d)
        Symmetric matrix (checked to tolerance).

    Returns
    -------
    L : array, shape (d, d)
        Lower-triangular factor with strictly positive diagonal.

    Raises
    ------
    NotPositiveDefiniteError
        If ``m`` is not numerically positive definite. Callers decide
        whether to repair (see :func:`repair_to_spd`) or fall back.
    """
    m = _check_square(m)
    if not np.isfinite(m).all():
        raise NotPositiveDefiniteError("matrix has non-finite entries")
    _check_symmetric(m)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    if not (np.diag(chol) > 0).all():
        raise NotPositiveDefiniteError("Cholesky factor has non-positive diagonal")
    return chol


class SpdMatrix:
    """Immutable SPD matrix with its lower Cholesky factor.

    Construction symmetrizes the input (averaging with its transpose, which
    absorbs rounding-level asymmetry from weighted accumulations) and
    factors it eagerly, so every live instance is guaranteed factorizable.

    Attributes
    ----------
    entries : array, shape (d, d)
        The matrix itself (read-only view).
    chol : array, shape (d, d)
        Lower-triangular L with ``L @ L.T == entries`` (read-only view).
    """

    __slots__ = ("entries", "chol")

    def __init__(self, entries: np.ndarray, chol: np.ndarray | None = None):
        m = _check_square(entries)
        if chol is None:
            _check_symmetric(m)
            m = 0.5 * (m + m.T)
            chol = cholesky(m)
        else:
            chol = np.array(chol, dtype=float)
            m = np.array(m)
        m.flags.writeable = False
        chol.flags.writeable = False
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "chol", chol)

    def __setattr__(self, name, value):
        raise AttributeError("SpdMatrix is immutable")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "SpdMatrix":
        eye = np.eye(dim)
        return cls(eye, chol=np.eye(dim))

    @classmethod
    def from_factor(cls, chol: np.ndarray) -> "SpdMatrix":
        """Build from a known lower factor without re-factorizing."""
        chol = np.asarray(chol, dtype=float)
        if not (np.diag(chol) > 0).all():
            raise NotPositiveDefiniteError("factor diagonal must be positive")
        return cls(chol @ chol.T, chol=chol)

    def __repr__(self) -> str:
        return f"SpdMatrix(dim={self.dim})"


def log_det(m: SpdMatrix) -> float:
    """log determinant, computed as 2 * sum(log diag(L))."""
    return float(2.0 * np.sum(np.log(np.diag(m.chol))))


def mahalanobis_sq(x: np.ndarray, mu: np.ndarray, m: SpdMatrix) -> float:
    """(x - mu)^T m^{-1} (x - mu) via triangular solves against L.

    Raises
    ------
    ValueError
        On dimension mismatch.
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if x.shape != (m.dim,) or mu.shape != (m.dim,):
        raise ValueError(
            f"dimension mismatch: x {x.shape}, mu {mu.shape}, matrix dim {m.dim}"
        )
    diff = (x - mu).reshape(1, -1)
    return float(kernels.batch_mahalanobis_sq(diff, m.chol)[0])


def mahalanobis_sq_batch(x: np.ndarray, mu: np.ndarray, m: SpdMatrix) -> np.ndarray:
    """Row-wise squared Mahalanobis distances for an (N, d) sample matrix."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if x.ndim != 2 or x.shape[1] != m.dim or mu.shape != (m.dim,):
        raise ValueError(
            f"dimension mismatch: x {x.shape}, mu {mu.shape}, matrix dim {m.dim}"
        )
    return kernels.batch_mahalanobis_sq(np.ascontiguousarray(x - mu), m.chol)


def eigen_spectrum(m: np.ndarray | SpdMatrix) -> np.ndarray:
    """Real eigenvalues of a symmetric matrix, sorted non-increasing."""
    entries = m.entries if isinstance(m, SpdMatrix) else _check_square(m)
    return np.linalg.eigvalsh(entries)[::-1]


def default_jitter(m: np.ndarray) -> float:
    """Scale-free base jitter: 1e-9 * trace(m)/d, floored for tiny traces."""
    d = m.shape[0]
    tr = float(np.trace(m))
    return 1e-9 * max(tr / d, 1.0) if tr > 0 else 1e-9


def repair_to_spd(
    m: np.ndarray, jitter0: float | None = None
) -> tuple[SpdMatrix, float]:
    """Add the smallest diagonal jitter that makes ``m`` factorizable.

    Tries lambda in {0, jitter0, 2*jitter0, 4*jitter0, ...} and returns the
    repaired matrix together with the lambda actually used (0.0 when the
    input was already SPD, making the repair a no-op).

    Raises
    ------
    RepairFailedError
        After 60 doublings, or immediately for non-finite input. The caller
        decides the fallback (typically: keep the previous covariance).
    """
    m = _check_square(m)
    if not np.isfinite(m).all():
        raise RepairFailedError("matrix has non-finite entries")
    _check_symmetric(m)
    m = 0.5 * (m + m.T)
    if jitter0 is None:
        jitter0 = default_jitter(m)
    if jitter0 <= 0:
        raise ValueError("jitter0 must be positive")

    eye = np.eye(m.shape[0])
    ladder = [0.0] + [jitter0 * (2.0**k) for k in range(REPAIR_MAX_DOUBLINGS + 1)]
    for lam in ladder:
        try:
            chol = np.linalg.cholesky(m + lam * eye)
            if (np.diag(chol) > 0).all():
                return SpdMatrix(m + lam * eye, chol=chol), lam
        except np.linalg.LinAlgError:
            continue
    raise RepairFailedError(
        f"no SPD repair after {REPAIR_MAX_DOUBLINGS} doublings from {jitter0:.3e}"
    )
