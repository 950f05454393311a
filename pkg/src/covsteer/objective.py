"""KL divergence between zero-mean Gaussians and its covariance gradient."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotPositiveDefiniteError
from .linalg import as_square, is_positive_definite, symmetrize

__all__ = ["KlEvaluation", "GaussianReference", "kl_gaussian"]


@dataclass(frozen=True)
class KlEvaluation:
    value: float
    grad_wrt_sigma: np.ndarray
    logdet_ref: float
    logdet_sigma: float


def _cholesky(S, which):
    if not is_positive_definite(S):
        raise NotPositiveDefiniteError(which)
    return scipy.linalg.cho_factor(S, lower=True)


def _logdet(cho):
    return 2.0 * float(np.sum(np.log(np.diag(cho[0]))))


class GaussianReference:
    """Factorized reference covariance, reused across many KL evaluations.

    Holds the Cholesky factor, log-determinant and inverse of ``sigma_ref``.
    Immutable after construction.
    """

    def __init__(self, sigma_ref):
        sigma_ref = symmetrize(as_square(sigma_ref, "sigma_ref"))
        self.sigma = sigma_ref
        self.dim = sigma_ref.shape[0]
        self._cho = _cholesky(sigma_ref, "sigma_ref")
        self.logdet = _logdet(self._cho)
        self.inverse = symmetrize(scipy.linalg.cho_solve(self._cho, np.eye(self.dim)))
        self.sigma.setflags(write=False)
        self.inverse.setflags(write=False)


def kl_gaussian(sigma, sigma_ref):
    """``KL(N(0, sigma) || N(0, sigma_ref))`` in nats, with its gradient.

    Parameters
    ----------
    sigma : (n, n) array_like
        Symmetric positive definite covariance.
    sigma_ref : (n, n) array_like or GaussianReference
        Reference covariance; pass a :class:`GaussianReference` to reuse its
        factorization.

    Returns
    -------
    KlEvaluation
        ``value = (tr(sigma_ref^-1 sigma) - n + ln|sigma_ref| - ln|sigma|) / 2``
        and ``grad_wrt_sigma = (sigma_ref^-1 - sigma^-1) / 2``.

    Raises
    ------
    NotPositiveDefiniteError
        With ``which`` set to ``"sigma"`` or ``"sigma_ref"``.
    """
    ref = sigma_ref if isinstance(sigma_ref, GaussianReference) else GaussianReference(sigma_ref)
    sigma = as_square(sigma, "sigma")
    if sigma.shape[0] != ref.dim:
        raise DimensionError(f"sigma is {sigma.shape}, sigma_ref is {ref.dim}x{ref.dim}")
    sigma = symmetrize(sigma)
    cho = _cholesky(sigma, "sigma")
    logdet_sigma = _logdet(cho)
    n = ref.dim
    value = 0.5 * (float(np.sum(ref.inverse * sigma)) - n + ref.logdet - logdet_sigma)
    sigma_inv = scipy.linalg.cho_solve(cho, np.eye(n))
    grad = symmetrize(0.5 * (ref.inverse - sigma_inv))
    return KlEvaluation(value, grad, ref.logdet, logdet_sigma)
