"""Discrete-time Lyapunov solvers.

Two equations are handled::

    primal:   M X M^T - X + Q = 0
    adjoint:  M^T L M - L + G = 0

The adjoint is the primal equation for ``M^T``, so both share one code path.
Small systems (n <= 64) are solved directly on the half-vectorized unknown
``vech(X)``; larger ones use Smith's squaring iteration. :func:`oracle_solve_vec`
is a deliberately naive full-Kronecker solve kept for cross-checking.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, SolveFailure, UnstableMatrixError
from .linalg import as_square, frobenius_norm, spectral_radius, symmetrize

__all__ = [
    "LyapunovSolveReport",
    "solve_primal",
    "solve_adjoint",
    "oracle_solve_vec",
    "lyapunov_residual",
    "DIRECT_MAX_DIM",
]

DIRECT_MAX_DIM = 64
SMITH_RTOL = 1e-12
SMITH_MAX_ITER = 200
RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class LyapunovSolveReport:
    """Solution of a Lyapunov equation plus how it was obtained.

    ``residual_fro`` is recomputed from the returned ``solution``.
    """

    solution: np.ndarray
    residual_fro: float
    method: str  # "direct_vec" or "smith_iteration"
    iterations: int


def lyapunov_residual(M, X, Q):
    """Frobenius norm of ``M X M^T - X + Q``."""
    return frobenius_norm(M @ X @ M.T - X + Q)


def _check_symmetric(Q, name):
    Q = as_square(Q, name)
    scale = max(1.0, float(np.max(np.abs(Q))))
    if np.max(np.abs(Q - Q.T)) > 1e-12 * scale:
        raise ValueError(f"{name} must be symmetric")
    return symmetrize(Q)


def _solve_vech(M, Q):
    n = M.shape[0]
    ii, jj = np.tril_indices(n)
    K = np.kron(M, M)[ii * n + jj]
    # column for X_kl with k > l collects both X_kl and X_lk
    off = (ii != jj)
    Kh = K[:, ii * n + jj] + K[:, jj * n + ii] * off
    Kh[np.diag_indices_from(Kh)] -= 1.0
    try:
        x = scipy.linalg.solve(Kh, -Q[ii, jj])
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SolveFailure(f"vectorized Lyapunov system is singular: {exc}") from exc
    X = np.empty((n, n))
    X[ii, jj] = x
    X[jj, ii] = x
    return X


def _solve_smith(M, Q):
    X = Q.copy()
    Ak = M.copy()
    for k in range(1, SMITH_MAX_ITER + 1):
        X_next = Ak @ X @ Ak.T + X
        Ak = Ak @ Ak
        if frobenius_norm(X_next - X) <= SMITH_RTOL * frobenius_norm(X_next):
            return symmetrize(X_next), k
        X = X_next
    raise SolveFailure(f"Smith iteration did not converge in {SMITH_MAX_ITER} steps")


def _solve(M, Q, method, name):
    M = as_square(M, "A_u")
    Q = _check_symmetric(Q, name)
    if Q.shape != M.shape:
        raise DimensionError(f"{name} has shape {Q.shape}, expected {M.shape}")
    rho = spectral_radius(M)
    if rho >= 1.0:
        raise UnstableMatrixError(rho)

    if method == "auto":
        method = "direct_vec" if M.shape[0] <= DIRECT_MAX_DIM else "smith_iteration"
    if method == "direct_vec":
        X, iterations = _solve_vech(M, Q), 0
    elif method == "smith_iteration":
        X, iterations = _solve_smith(M, Q)
    else:
        raise ValueError(f"unknown method {method!r}")

    residual = lyapunov_residual(M, X, Q)
    if residual > RESIDUAL_RTOL * max(1.0, frobenius_norm(Q)):
        raise SolveFailure(f"Lyapunov residual {residual:.3e} exceeds tolerance ({method})")
    return LyapunovSolveReport(X, residual, method, iterations)


def solve_primal(A_u, Q, method="auto"):
    """Solve ``A_u X A_u^T - X + Q = 0`` for symmetric ``X``.

    Parameters
    ----------
    A_u : (n, n) array_like
        Schur-stable system matrix.
    Q : (n, n) array_like
        Symmetric source term, typically ``B B^T``.
    method : {"auto", "direct_vec", "smith_iteration"}
        ``"auto"`` picks the direct solve for ``n <= 64``.

    Returns
    -------
    LyapunovSolveReport

    Raises
    ------
    UnstableMatrixError
        If ``A_u`` has spectral radius >= 1.
    SolveFailure
        If the plug-back residual exceeds ``1e-10 * max(1, ||Q||_F)``.
    """
    return _solve(A_u, Q, method, "Q")


def solve_adjoint(A_u, G, method="auto"):
    """Solve ``A_u^T L A_u - L + G = 0``; ``G`` may be indefinite.

    Same contract as :func:`solve_primal` applied to ``A_u^T``.
    """
    return _solve(np.asarray(A_u, dtype=float).T, G, method, "G")


def oracle_solve_vec(A_u, Q, transpose_form=False):
    """Reference solve through the full ``n^2 x n^2`` Kronecker system.

    The coefficient matrix is assembled entry by entry, without ``np.kron``
    or any symmetry reduction, so it shares no structure with
    :func:`solve_primal`. Only meant for tests (``n <= 20``).
    """
    M = as_square(A_u, "A_u")
    Q = as_square(Q, "Q")
    n = M.shape[0]
    if n > 20:
        raise DimensionError("oracle_solve_vec is limited to n <= 20")
    if transpose_form:
        M = M.T
    N = n * n
    K = np.zeros((N, N))
    for i in range(n):
        for j in range(n):
            row = i * n + j
            for k in range(n):
                for l in range(n):
                    # (M X M^T)_ij = sum_kl M_ik X_kl M_jl
                    K[row, k * n + l] = M[i, k] * M[j, l]
            K[row, row] -= 1.0
    rhs = -Q.reshape(N)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(K, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SolveFailure(f"oracle system is singular: {exc}") from exc
    if np.any(np.abs(np.diag(lu)) <= np.finfo(float).eps * np.max(np.abs(K))):
        raise SolveFailure("oracle system is singular (some eigenvalue product equals 1)")
    x = scipy.linalg.lu_solve((lu, piv), rhs)
    return symmetrize(x.reshape(n, n))
