"""Exception hierarchy shared by all covsteer modules."""


class CovSteerError(Exception):
    """Base class for every error raised by covsteer."""


class DimensionError(CovSteerError, ValueError):
    """Operands have incompatible or malformed shapes."""


class NonFiniteError(CovSteerError, ValueError):
    """An input contains NaN or Inf."""


class EigenvalueError(CovSteerError):
    """The dense eigenvalue routine failed to converge."""


class UnstableMatrixError(CovSteerError):
    """A matrix that must be Schur stable has spectral radius >= 1."""

    def __init__(self, radius, message=None):
        self.radius = float(radius)
        super().__init__(message or f"matrix is not Schur stable (spectral radius {self.radius:.6g})")


class SolveFailure(CovSteerError):
    """A Lyapunov solve did not meet its residual or convergence tolerance."""


class NotPositiveDefiniteError(CovSteerError):
    """A covariance argument failed the positive-definiteness check.

    ``which`` names the offending argument, e.g. ``"sigma"`` or ``"sigma_ref"``.
    """

    def __init__(self, which):
        self.which = which
        super().__init__(f"{which} is not positive definite")


class InfeasibleStartError(CovSteerError):
    """The initial intervention leaves ``A + U0`` unstable."""


class ConfigError(CovSteerError):
    """A configuration document or override is invalid."""


class DegenerateCovarianceError(CovSteerError):
    """A sample covariance has too low a rank for the requested projection."""
