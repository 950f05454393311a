"""
Auditing the adjoint gradient
=============================

The gradient of the KL objective with respect to ``U`` comes from two
Lyapunov solves rather than from differentiating through the solver. Here we
compare it with central differences, entry by entry.
"""

# %%
import numpy as np

from covsteer import SteeringProblem, finite_difference_gradient, gradient_wrt_u
from covsteer.lyapunov import oracle_solve_vec, solve_adjoint, solve_primal

rng = np.random.default_rng(0)
n = 4
A = rng.standard_normal((n, n))
A *= 0.7 / max(abs(np.linalg.eigvals(A)))
B = 0.4 * rng.standard_normal((n, n))
W = rng.standard_normal((n, n))
problem = SteeringProblem(A, B, W @ W.T / n + 0.1 * np.eye(n))

# %%
# First the building blocks. Both Lyapunov forms agree with a brute-force
# Kronecker solve.

M = A + 0.05 * rng.standard_normal((n, n))
X = solve_primal(M, problem.noise_cov).solution
L = solve_adjoint(M, np.eye(n)).solution
print("primal vs Kronecker:", np.abs(X - oracle_solve_vec(M, problem.noise_cov)).max())
print("adjoint vs Kronecker:", np.abs(L - oracle_solve_vec(M, np.eye(n), transpose_form=True)).max())

# %%
# Now the gradient itself.

u = 0.05 * rng.standard_normal((n, n))
analytic = gradient_wrt_u(problem, u).grad
numeric = finite_difference_gradient(problem, u, step=1e-5)
rel = np.abs(analytic - numeric) / np.abs(analytic)
np.set_printoptions(precision=2)
print(rel)
print("worst relative deviation:", f"{rel.max():.1e}")
