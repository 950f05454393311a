import numpy as np
import pytest

from conftest import A4, B4, random_stable, random_symmetric
from covsteer.errors import SolveFailure, UnstableMatrixError
from covsteer.linalg import frobenius_inner, frobenius_norm
from covsteer.lyapunov import lyapunov_residual, oracle_solve_vec, solve_adjoint, solve_primal


def random_instance(rng, n_max=8, rho_max=0.95):
    n = int(rng.integers(1, n_max + 1))
    M = random_stable(rng, n, rng.uniform(0.0, rho_max))
    W = rng.standard_normal((n, int(rng.integers(1, n + 1))))
    return M, W @ W.T


class TestPrimalExamples:
    def test_zero_dynamics(self):
        Q = B4 @ B4.T
        np.testing.assert_allclose(solve_primal(np.zeros((5, 5)), Q).solution, Q, atol=1e-15)

    def test_scalar(self):
        # x = q / (1 - a^2)
        rep = solve_primal([[0.5]], [[1.0]])
        assert rep.solution[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-14)
        assert rep.method == "direct_vec" and rep.iterations == 0

    def test_decoupled(self):
        X = solve_primal(np.diag([0.5, 0.2]), np.eye(2)).solution
        np.testing.assert_allclose(X, np.diag([4 / 3, 25 / 24]), rtol=1e-14, atol=1e-15)

    def test_unstable_rejected(self):
        with pytest.raises(UnstableMatrixError):
            solve_primal(np.eye(2), np.eye(2))

    def test_asymmetric_source_rejected(self):
        with pytest.raises(ValueError):
            solve_primal(0.5 * np.eye(2), [[1.0, 1.0], [0.0, 1.0]])


class TestAdjointExamples:
    def test_zero_dynamics(self, rng):
        G = random_symmetric(rng, 4)
        np.testing.assert_allclose(solve_adjoint(np.zeros((4, 4)), G).solution, G, atol=1e-15)

    def test_scalar(self):
        g = -0.37
        assert solve_adjoint([[0.5]], [[g]]).solution[0, 0] == pytest.approx(4 * g / 3, rel=1e-14)

    def test_zero_source(self, rng):
        M = random_stable(rng, 4, 0.9)
        np.testing.assert_array_equal(solve_adjoint(M, np.zeros((4, 4))).solution, np.zeros((4, 4)))

    def test_is_transposed_primal(self, rng):
        M = random_stable(rng, 4, 0.8)
        G = random_symmetric(rng, 4)
        L = solve_adjoint(M, G).solution
        assert frobenius_norm(M.T @ L @ M - L + G) <= 1e-10 * max(1, frobenius_norm(G))


class TestOracle:
    def test_five_state_agreement(self):
        Q = B4 @ B4.T
        np.testing.assert_allclose(solve_primal(A4, Q).solution, oracle_solve_vec(A4, Q), rtol=0, atol=1e-9)

    def test_zero_and_scalar(self, rng):
        Q = random_symmetric(rng, 3)
        np.testing.assert_allclose(oracle_solve_vec(np.zeros((3, 3)), Q), Q, atol=1e-15)
        assert oracle_solve_vec([[0.5]], [[1.0]])[0, 0] == pytest.approx(4 / 3, rel=1e-14)

    def test_transpose_form(self, rng):
        M = random_stable(rng, 4, 0.7)
        G = random_symmetric(rng, 4)
        np.testing.assert_allclose(oracle_solve_vec(M, G, transpose_form=True), solve_adjoint(M, G).solution,
                                   atol=1e-10)

    def test_singular(self):
        # eigenvalue product 1 makes the vectorized system singular
        with pytest.raises(SolveFailure):
            oracle_solve_vec(np.eye(2), np.eye(2))


class TestInvariants:
    def test_residual_random(self, rng):
        for _ in range(100):
            M, Q = random_instance(rng, n_max=10)
            rep = solve_primal(M, Q)
            assert rep.residual_fro == lyapunov_residual(M, rep.solution, Q)
            assert rep.residual_fro <= 1e-10 * max(1.0, frobenius_norm(Q))

    def test_oracle_equivalence(self, rng):
        for _ in range(100):
            M, Q = random_instance(rng)
            np.testing.assert_allclose(solve_primal(M, Q).solution, oracle_solve_vec(M, Q), rtol=0, atol=1e-8)

    def test_exact_symmetry_and_psd(self, rng):
        for _ in range(50):
            M, Q = random_instance(rng)
            X = solve_primal(M, Q).solution
            np.testing.assert_array_equal(X, X.T)
            assert np.linalg.eigvalsh(X).min() >= -1e-10 * frobenius_norm(X)

    def test_adjoint_duality(self, rng):
        # <P(Q), G> = <Q, P*(G)>
        for _ in range(100):
            M, Q = random_instance(rng)
            G = random_symmetric(rng, M.shape[0])
            lhs = frobenius_inner(solve_primal(M, Q).solution, G)
            rhs = frobenius_inner(Q, solve_adjoint(M, G).solution)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


class TestSmith:
    def test_agrees_with_direct(self, rng):
        for _ in range(20):
            M, Q = random_instance(rng)
            direct = solve_primal(M, Q).solution
            rep = solve_primal(M, Q, method="smith_iteration")
            assert rep.method == "smith_iteration" and rep.iterations > 0
            np.testing.assert_allclose(rep.solution, direct, rtol=0, atol=1e-10 * max(1, np.abs(direct).max()))

    def test_auto_switches_for_large_n(self, rng):
        M = random_stable(rng, 70, 0.9)
        rep = solve_primal(M, np.eye(70))
        assert rep.method == "smith_iteration"
        assert rep.residual_fro <= 1e-10 * frobenius_norm(np.eye(70))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve_primal([[0.5]], [[1.0]], method="bartels")
