"""
Steering a five-state system toward a target covariance
=======================================================

A stable five-state system driven by isotropic noise settles into a
stationary covariance. We look for a sparse additive change ``U`` to its
dynamics so that this covariance lands close to a prescribed target.
"""

# %%
# Load the bundled problem
# ------------------------
# The config ships with the package. It fixes ``A``, ``B``, the target
# covariance, a tiny seed value in the last diagonal slot of ``U`` and the
# step size and sparsity weight.

import numpy as np

from covsteer import solve
from covsteer.config import bundled_config, load_config
from covsteer.linalg import spectral_radius
from covsteer.lyapunov import solve_primal

cfg = load_config(bundled_config("five_state"))
problem = cfg.problem
print("spectral radius of A:", round(spectral_radius(problem.A), 4))

# %%
# How far off are we without any intervention?
# --------------------------------------------

from covsteer import kl_gaussian

sigma0 = solve_primal(problem.A, problem.noise_cov).solution
print("KL divergence with U = 0:", round(kl_gaussian(sigma0, problem.reference).value, 4))

# %%
# Run proximal gradient
# ---------------------
# Each iteration solves one primal and one adjoint Lyapunov equation. Steps
# that would leave the stable region or raise the composite objective are
# halved until accepted.

res = solve(problem, cfg.solver)
print("status:", res.status.value, "after", len(res.trace), "iterations")
print("objective:", round(res.j_initial, 4), "->", round(res.j_final, 4))

# %%
# The intervention touches only four entries of the 25.

np.set_printoptions(precision=4, suppress=True)
print(res.u_final)
for i, j in zip(*np.nonzero(res.u_final)):
    print(f"  U[{i + 1},{j + 1}] = {res.u_final[i, j]:+.4f}")
print("||U||_1 =", round(res.l1_norm, 4), " budget respected:", res.budget_satisfied)

# %%
# Convergence history
# -------------------
# ``trace`` keeps one record per accepted step.

j = res.trace.column("j")
nnz = res.trace.column("nnz")
for k in (0, 4, 9, 24, 49, 99):
    print(f"iter {k + 1:3d}  J={j[k]:.5f}  nnz={int(nnz[k])}")
