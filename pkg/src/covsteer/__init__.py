"""Sparse structural covariance steering for discrete-time linear systems."""

from .errors import (
    ConfigError,
    CovSteerError,
    InfeasibleStartError,
    NotPositiveDefiniteError,
    SolveFailure,
    UnstableMatrixError,
)
from .lyapunov import oracle_solve_vec, solve_adjoint, solve_primal
from .objective import kl_gaussian
from .steering import (
    SolverConfig,
    SolveResult,
    SolveStatus,
    SteeringProblem,
    finite_difference_gradient,
    gradient_wrt_u,
    prox_step,
    soft_threshold,
    solve,
)

__version__ = "0.1.0"
