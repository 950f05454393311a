"""Dense real-matrix helpers and numerical predicates.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The checking
helpers (:func:`as_square`, :func:`as_matrix`) reject NaN/Inf and malformed
shapes so that downstream solvers can assume clean input.
"""

import numpy as np

from .errors import DimensionError, EigenvalueError, NonFiniteError

__all__ = [
    "as_matrix",
    "as_square",
    "spectral_radius",
    "is_schur_stable",
    "is_positive_definite",
    "default_pd_tol",
    "symmetrize",
    "frobenius_norm",
    "entrywise_l1_norm",
    "frobenius_inner",
]


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float64 array."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return M


def as_square(M, name="matrix"):
    """Return ``M`` as a finite square float64 array."""
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise DimensionError(f"{name} must be square and non-empty, got shape {M.shape}")
    return M


def spectral_radius(M):
    """Largest eigenvalue modulus of a square matrix.

    Raises
    ------
    EigenvalueError
        If LAPACK's eigenvalue iteration does not converge.
    """
    M = as_square(M)
    try:
        eig = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueError(f"eigenvalue computation did not converge: {exc}") from exc
    return float(np.max(np.abs(eig)))


def is_schur_stable(M, margin=0.0):
    """True iff ``spectral_radius(M) < 1 - margin``."""
    if not 0.0 <= margin < 1.0:
        raise ValueError(f"margin must lie in [0, 1), got {margin}")
    return spectral_radius(M) < 1.0 - margin


def default_pd_tol(M):
    # relative floor, scale-free
    M = np.asarray(M, dtype=float)
    return 1e-12 * abs(np.trace(M)) / M.shape[0]


def is_positive_definite(M, tol=None):
    """Cholesky-pivot test for positive definiteness.

    The pivots of the ``LDL^T`` factorization are recovered from the Cholesky
    factor; the matrix passes when all of them exceed ``tol``. The
    default tolerance is ``1e-12 * trace(M) / n``. Never raises on numerical
    failure; a failed factorization simply returns ``False``.
    """
    try:
        M = as_square(M)
    except (DimensionError, NonFiniteError):
        return False
    if tol is None:
        tol = default_pd_tol(M)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    # LDL^T pivots d_i = M_ii - sum_{k<i} L_ik^2; never rounds above M_ii
    pivots = np.diag(M) - np.sum(np.tril(L, -1) ** 2, axis=1)
    return bool(np.all(np.isfinite(pivots)) and np.all(pivots > tol))


def symmetrize(M):
    """Return ``(M + M.T) / 2``; the result is exactly symmetric."""
    M = as_square(M)
    # a + b == b + a in IEEE arithmetic, so the result is bitwise symmetric
    return 0.5 * (M + M.T)


def frobenius_norm(M):
    return float(np.linalg.norm(as_matrix(M), "fro"))


def entrywise_l1_norm(M):
    return float(np.abs(as_matrix(M)).sum())


def frobenius_inner(M1, M2):
    """``tr(M1^T M2)``."""
    M1 = as_matrix(M1)
    M2 = as_matrix(M2)
    if M1.shape != M2.shape:
        raise DimensionError(f"shape mismatch: {M1.shape} vs {M2.shape}")
    return float(np.sum(M1 * M2))
