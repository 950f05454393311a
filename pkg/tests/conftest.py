import numpy as np
import pytest

from covsteer import SolverConfig, SteeringProblem
from covsteer.config import bundled_config, load_config

A4 = np.array([
    [0.386, 0, 0, 0, 0.161],
    [0, 0.461, 0, -0.047, 0],
    [-0.042, 0, 0.317, 0.134, -0.117],
    [0, 0, 0.134, 0.401, -0.157],
    [0.161, 0, -0.117, -0.157, 0.85],
])
B4 = np.sqrt(0.003) * np.eye(5)
SIGMA_REF4 = np.array([
    [0.0025, 0.001, 0.0002, -0.0014, -0.0002],
    [0.001, 0.0027, -0.0003, -0.0014, 0.0002],
    [0.0002, -0.0003, 0.0013, 0.0006, -0.0003],
    [-0.0014, -0.0014, 0.0006, 0.0093, -0.0004],
    [-0.0002, 0.0002, -0.0003, -0.0004, 0.0012],
])
# nonzero entries of the published final intervention, 0-based
U4_EXPECTED = {(0, 0): -0.0425, (2, 2): -0.0825, (4, 0): -0.0539, (4, 4): -0.6897}


def u4_expected():
    U = np.zeros((5, 5))
    for (i, j), v in U4_EXPECTED.items():
        U[i, j] = v
    return U


def u4_initial():
    U = np.zeros((5, 5))
    U[4, 4] = 1e-3
    return U


def random_stable(rng, n, radius):
    """Random dense matrix rescaled to the given spectral radius."""
    M = rng.standard_normal((n, n))
    rho = np.max(np.abs(np.linalg.eigvals(M)))
    return M * (radius / rho) if rho > 0 else M


def random_pd(rng, n, floor=0.1):
    W = rng.standard_normal((n, n))
    return W @ W.T / n + floor * np.eye(n)


def random_symmetric(rng, n):
    W = rng.standard_normal((n, n))
    return 0.5 * (W + W.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def five_state_problem():
    return SteeringProblem(A4, B4, SIGMA_REF4, l1_budget=4.0)


@pytest.fixture(scope="session")
def five_state_config():
    return load_config(bundled_config("five_state"))


@pytest.fixture(scope="session")
def five_state_result(five_state_problem):
    from covsteer import solve
    return solve(five_state_problem, SolverConfig(eta=0.1, lam=0.5, max_iter=100, u0=u4_initial()))
