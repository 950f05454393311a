"""Sparse covariance steering by proximal gradient descent.

The intervention ``U`` is added to the system matrix, ``x+ = (A + U) x + B w``,
and chosen to minimise ``KL(Sigma_U || Sigma_ref) + lam * ||U||_1`` where
``Sigma_U`` is the steady-state covariance. The gradient of the KL term comes
from one primal and one adjoint Lyapunov solve::

    dJ/dU = 2 Lam (A + U) Sigma

Each iteration takes a gradient step, soft-thresholds, and zeroes entries
outside the support set. Steps that would leave the stable region or raise
the composite objective are halved until acceptable.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionError,
    InfeasibleStartError,
    NotPositiveDefiniteError,
    SolveFailure,
    UnstableMatrixError,
)
from .linalg import (
    as_matrix,
    as_square,
    entrywise_l1_norm,
    frobenius_norm,
    is_schur_stable,
    spectral_radius,
    symmetrize,
)
from .lyapunov import solve_adjoint, solve_primal
from .objective import GaussianReference, kl_gaussian

__all__ = [
    "SteeringProblem",
    "SolverConfig",
    "SolveStatus",
    "TraceRecord",
    "SolveTrace",
    "SolveResult",
    "GradientEvaluation",
    "support_mask",
    "objective_value",
    "gradient_wrt_u",
    "finite_difference_gradient",
    "soft_threshold",
    "project_support",
    "prox_step",
    "solve",
]

log = logging.getLogger(__name__)

COMPOSITE_SLACK = 1e-9


def support_mask(support, n):
    """Boolean ``(n, n)`` mask from ``None`` (full), a mask, or 0-based pairs."""
    if support is None:
        return np.ones((n, n), dtype=bool)
    arr = np.asarray(support)
    if arr.dtype == bool:
        if arr.shape != (n, n):
            raise DimensionError(f"support mask has shape {arr.shape}, expected {(n, n)}")
        return arr.copy()
    mask = np.zeros((n, n), dtype=bool)
    for pair in support:
        i, j = (int(v) for v in pair)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"support pair {(i, j)} out of range for n={n}")
        mask[i, j] = True
    return mask


@dataclass
class SteeringProblem:
    """A covariance steering instance.

    ``support`` is ``None`` for full support, an ``(n, n)`` boolean mask, or
    an iterable of 0-based ``(row, col)`` pairs. ``l1_budget`` bounds
    ``||U||_1`` in the admissible set; it is audited, not enforced.
    """

    A: np.ndarray
    B: np.ndarray
    sigma_ref: np.ndarray
    support: object = None
    l1_budget: float = np.inf
    reference: GaussianReference = field(init=False, repr=False)
    noise_cov: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.A = as_square(self.A, "A")
        n = self.A.shape[0]
        self.B = as_matrix(self.B, "B")
        if self.B.shape[0] != n:
            raise DimensionError(f"B has {self.B.shape[0]} rows, expected {n}")
        self.sigma_ref = as_square(self.sigma_ref, "sigma_ref")
        if self.sigma_ref.shape != (n, n):
            raise DimensionError(f"sigma_ref has shape {self.sigma_ref.shape}, expected {(n, n)}")
        self.support = support_mask(self.support, n)
        self.l1_budget = float(self.l1_budget)
        if not self.l1_budget >= 0:
            raise ValueError("l1_budget must be nonnegative")
        self.reference = GaussianReference(self.sigma_ref)
        self.noise_cov = symmetrize(self.B @ self.B.T)

    @property
    def n(self):
        return self.A.shape[0]


@dataclass
class SolverConfig:
    eta: float = 0.1
    lam: float = 0.5
    epsilon: float = 1e-6
    max_iter: int = 100
    u0: np.ndarray = None
    stability_margin: float = 1e-6
    backtrack_factor: float = 0.5
    max_backtracks: int = 30

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.lam >= 0:
            raise ValueError("lam must be nonnegative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not 0 <= self.stability_margin < 1:
            raise ValueError("stability_margin must lie in [0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if int(self.max_backtracks) != self.max_backtracks or self.max_backtracks < 1:
            raise ValueError("max_backtracks must be a positive integer")
        self.max_iter = int(self.max_iter)
        self.max_backtracks = int(self.max_backtracks)
        if self.u0 is not None:
            self.u0 = as_square(self.u0, "u0")


class SolveStatus(str, enum.Enum):
    CONVERGED_GRAD_NORM = "converged_grad_norm"
    MAX_ITERATIONS = "max_iterations"
    STALLED_UNSTABLE = "stalled_unstable"


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    j: float
    grad_fro: float
    step: float
    nnz: int
    l1_norm: float
    backtracks: int


@dataclass
class SolveTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


@dataclass
class SolveResult:
    u_final: np.ndarray
    sigma_final: np.ndarray
    j_final: float
    status: SolveStatus
    budget_satisfied: bool
    trace: SolveTrace
    grad_final: np.ndarray
    j_initial: float

    @property
    def nnz(self):
        return int(np.count_nonzero(self.u_final))

    @property
    def l1_norm(self):
        return entrywise_l1_norm(self.u_final)


class GradientEvaluation(NamedTuple):
    grad: np.ndarray
    sigma: np.ndarray
    j: float


def objective_value(problem, u):
    """``KL(Sigma_U || Sigma_ref)`` at intervention ``u``."""
    sigma = solve_primal(problem.A + u, problem.noise_cov).solution
    return kl_gaussian(sigma, problem.reference).value


def gradient_wrt_u(problem, u):
    """Dense gradient of the KL objective with respect to ``U``.

    Solves the primal equation for ``Sigma``, the adjoint equation with source
    ``dJ/dSigma``, and returns ``2 Lam (A + u) Sigma`` together with ``Sigma``
    and ``J`` so callers do not need to re-solve.
    """
    A_u = problem.A + as_square(u, "u")
    sigma = solve_primal(A_u, problem.noise_cov).solution
    kl = kl_gaussian(sigma, problem.reference)
    lam = solve_adjoint(A_u, kl.grad_wrt_sigma).solution
    return GradientEvaluation(2.0 * lam @ A_u @ sigma, sigma, kl.value)


def finite_difference_gradient(problem, u, step=1e-5):
    """Central-difference gradient of the KL objective on the support.

    Off-support entries are zero. Raises :class:`UnstableMatrixError` naming
    the entry if a perturbation leaves the stable region.
    """
    u = as_square(u, "u")
    fd = np.zeros_like(u)
    for i, j in zip(*np.nonzero(problem.support)):
        E = np.zeros_like(u)
        E[i, j] = step
        values = []
        for sign in (1.0, -1.0):
            A_p = problem.A + u + sign * E
            rho = spectral_radius(A_p)
            if rho >= 1.0:
                raise UnstableMatrixError(rho, f"perturbing entry ({i}, {j}) by {sign * step:+g} destabilizes A+U")
            values.append(objective_value(problem, u + sign * E))
        fd[i, j] = (values[0] - values[1]) / (2.0 * step)
    return fd


def soft_threshold(v, threshold):
    """Entrywise shrinkage toward zero; ``|v| <= threshold`` maps to exactly 0."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    out = np.where(v > threshold, v - threshold, 0.0)
    out = np.where(v < -threshold, v + threshold, out)
    return out


def project_support(u, support):
    """Zero the entries of ``u`` outside ``support`` (a boolean mask)."""
    u = np.asarray(u, dtype=float)
    return np.where(support, u, 0.0)


def prox_step(u, grad, eta, lam, support):
    """One projected proximal gradient update.

    ``V = u - eta * grad`` followed by soft-thresholding at ``eta * lam`` and
    projection onto the support.
    """
    u = np.asarray(u, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if u.shape != grad.shape:
        raise DimensionError(f"u {u.shape} and grad {grad.shape} differ")
    v = u - eta * grad
    return project_support(soft_threshold(v, eta * lam), support)


def _evaluate_candidate(problem, cand, margin):
    if not is_schur_stable(problem.A + cand, margin):
        return None
    try:
        return gradient_wrt_u(problem, cand)
    except (UnstableMatrixError, SolveFailure, NotPositiveDefiniteError):
        return None


def solve(problem, config=None):
    """Run the safeguarded proximal gradient iteration.

    Parameters
    ----------
    problem : SteeringProblem
    config : SolverConfig, optional

    Returns
    -------
    SolveResult
        ``status`` is ``converged_grad_norm`` once the on-support gradient
        norm at the current iterate drops below ``epsilon``,
        ``max_iterations`` at the cap, or ``stalled_unstable`` if no
        backtracked step was acceptable.

    Raises
    ------
    InfeasibleStartError
        If ``A + u0`` is not Schur stable.
    """
    config = config or SolverConfig()
    n = problem.n
    mask = problem.support
    u = np.zeros((n, n)) if config.u0 is None else config.u0.copy()
    if u.shape != (n, n):
        raise DimensionError(f"u0 has shape {u.shape}, expected {(n, n)}")
    if np.any(u[~mask] != 0):
        raise ValueError("u0 has nonzero entries outside the support set")
    rho = spectral_radius(problem.A + u)
    if rho >= 1.0:
        raise InfeasibleStartError(f"A + u0 is not Schur stable (spectral radius {rho:.6g})")

    ev = gradient_wrt_u(problem, u)
    j_initial = ev.j
    trace = SolveTrace()
    lam = config.lam
    it = 0
    while True:
        grad = np.where(mask, ev.grad, 0.0)
        if frobenius_norm(grad) < config.epsilon:
            status = SolveStatus.CONVERGED_GRAD_NORM
            break
        if it >= config.max_iter:
            status = SolveStatus.MAX_ITERATIONS
            break
        composite = ev.j + lam * entrywise_l1_norm(u)
        step = config.eta
        accepted = None
        for backtracks in range(config.max_backtracks + 1):
            cand = prox_step(u, grad, step, lam, mask)
            cand_ev = _evaluate_candidate(problem, cand, config.stability_margin)
            if cand_ev is not None and cand_ev.j + lam * entrywise_l1_norm(cand) <= composite + COMPOSITE_SLACK:
                accepted = (cand, cand_ev)
                break
            step *= config.backtrack_factor
        if accepted is None:
            status = SolveStatus.STALLED_UNSTABLE
            log.warning("no acceptable step after %d backtracks at iteration %d", config.max_backtracks, it + 1)
            break
        it += 1
        u, ev = accepted
        rec = TraceRecord(
            iteration=it,
            j=ev.j,
            grad_fro=frobenius_norm(np.where(mask, ev.grad, 0.0)),
            step=step,
            nnz=int(np.count_nonzero(u)),
            l1_norm=entrywise_l1_norm(u),
            backtracks=backtracks,
        )
        trace.records.append(rec)
        log.debug("iter %d: J=%.6g |g|=%.3g step=%.3g nnz=%d", it, rec.j, rec.grad_fro, step, rec.nnz)

    return SolveResult(
        u_final=u,
        sigma_final=ev.sigma,
        j_final=ev.j,
        status=status,
        budget_satisfied=entrywise_l1_norm(u) <= problem.l1_budget,
        trace=trace,
        grad_final=np.where(mask, ev.grad, 0.0),
        j_initial=j_initial,
    )
