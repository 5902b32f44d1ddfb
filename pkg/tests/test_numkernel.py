import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import jacobi_singular_values
from pseudospec import numkernel as nk
from pseudospec.errors import ExpOverflow, InvalidArgument, SingularMatrix


def rand_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


class TestAsMatrix:
    def test_rejects_nan(self):
        with pytest.raises(InvalidArgument):
            nk.as_matrix([[1.0, np.nan], [0, 1]])

    def test_rejects_nonsquare_when_asked(self):
        with pytest.raises(InvalidArgument):
            nk.as_matrix(np.ones((2, 3)), square=True)

    def test_dtype(self):
        assert nk.as_matrix([[1, 2], [3, 4]]).dtype == np.complex128


class TestSolve:
    def test_identity(self):
        B = np.arange(6.0).reshape(3, 2)
        assert np.allclose(nk.solve_linear(np.eye(3), B), B)

    def test_diagonal_inverse(self):
        X = nk.solve_linear(np.diag([2.0, 4.0]), np.eye(2))
        assert np.allclose(X, np.diag([0.5, 0.25]), atol=1e-15)

    def test_forward_multiply(self):
        rng = np.random.default_rng(3)
        A = rand_complex(rng, 5) + 5 * np.eye(5)
        X0 = rand_complex(rng, 5, 2)
        assert np.allclose(nk.solve_linear(A, A @ X0), X0, atol=1e-9)

    def test_vector_rhs_stays_vector(self):
        x = nk.solve_linear(np.diag([1.0, 2.0]), np.array([1.0, 1.0]))
        assert x.shape == (2,)

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            nk.solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))

    def test_residual_moderate_condition(self):
        rng = np.random.default_rng(4)
        U, _ = np.linalg.qr(rand_complex(rng, 6))
        V, _ = np.linalg.qr(rand_complex(rng, 6))
        A = U @ np.diag(np.logspace(0, -6, 6)) @ V
        B = rand_complex(rng, 6, 3)
        X = nk.solve_linear(A, B)
        assert np.linalg.norm(A @ X - B) <= 1e-9 * np.linalg.norm(B)


class TestEigen:
    def test_diagonal(self):
        w = nk.eigenvalues(np.diag([1, 2 + 3j])).values
        assert np.allclose(np.sort_complex(w), [1, 2 + 3j])

    def test_nilpotent(self):
        assert np.allclose(nk.eigenvalues([[0, 1], [0, 0]]).values, 0)

    def test_companion(self):
        # z^2 - 3z + 2
        w = nk.eigenvalues([[3, -2], [1, 0]]).values
        assert np.allclose(np.sort(w.real), [1, 2]) and np.allclose(w.imag, 0)

    def test_vectors_unit_and_residual(self):
        rng = np.random.default_rng(5)
        A = rand_complex(rng, 7)
        res = nk.eigenvalues(A, vectors=True)
        assert len(res) == 7
        assert np.allclose(np.linalg.norm(res.vectors, axis=0), 1)
        nA = nk.operator_norm(A)
        for lam, v in zip(res.values, res.vectors.T):
            assert np.linalg.norm(A @ v - lam * v) <= 1e-8 * nA

    def test_schur(self):
        rng = np.random.default_rng(6)
        A = rand_complex(rng, 6)
        T, Z = nk.schur(A)
        assert np.allclose(np.tril(T, -1), 0)
        assert np.allclose(Z @ T @ Z.conj().T, A)


class TestSingularValues:
    def test_identity(self):
        assert nk.smallest_singular_value(np.eye(4)) == pytest.approx(1.0, rel=1e-12)

    def test_diagonal(self):
        assert nk.smallest_singular_value(np.diag([1, 1e-3])) == pytest.approx(1e-3, rel=1e-10)

    def test_exactly_singular(self):
        assert nk.smallest_singular_value(np.zeros((3, 3))) == 0.0

    def test_random_6x6_against_jacobi(self):
        rng = np.random.default_rng(7)
        A = rand_complex(rng, 6)
        s = jacobi_singular_values(A)
        assert nk.smallest_singular_value(A) == pytest.approx(s[-1], rel=1e-8)
        assert nk.operator_norm(A) == pytest.approx(s[0], rel=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**31))
    def test_against_jacobi_property(self, n, seed):
        A = rand_complex(np.random.default_rng(seed), n)
        s = jacobi_singular_values(A)
        assert nk.smallest_singular_value(A) == pytest.approx(s[-1], rel=1e-8)
        assert nk.operator_norm(A) == pytest.approx(s[0], rel=1e-8)

    def test_zero_at_eigenvalues_only(self):
        rng = np.random.default_rng(8)
        for n in range(2, 9):
            A = rand_complex(rng, n)
            nA = nk.operator_norm(A)
            for lam in nk.eigenvalues(A).values:
                assert nk.smallest_singular_value(lam * np.eye(n) - A) <= 1e-8 * nA
            z = 10 * nA + 1j
            assert nk.smallest_singular_value(z * np.eye(n) - A) > 1e-8 * nA

    def test_triangular_shift_matches_svd(self):
        rng = np.random.default_rng(9)
        A = rand_complex(rng, 30)
        T, _ = nk.schur(A)
        v = None
        for z in np.linspace(-3, 3, 7) + 0.5j:
            s, v = nk.shifted_triangular_sigma_min(T, z, v)
            ref = sla.svdvals(z * np.eye(30) - A)[-1]
            assert s == pytest.approx(ref, rel=1e-8)

    def test_triangular_exact_eigenvalue(self):
        T = np.triu(np.ones((4, 4))) * (1 + 0j)
        s, _ = nk.shifted_triangular_sigma_min(T, 1.0)
        assert s == 0.0

    def test_sparse_matches_dense(self):
        import scipy.sparse as sp

        n = 50
        rng = np.random.default_rng(10)
        M = sp.diags([rand_complex(rng, 1, n)[0], -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1])
        dense = sla.svdvals(M.toarray())[-1]
        assert nk.sparse_smallest_singular_value(M) == pytest.approx(dense, rel=1e-8)


class TestNorm:
    def test_zero(self):
        assert nk.operator_norm(np.zeros((3, 3))) == 0.0

    def test_unitary_dft(self):
        F = np.fft.fft(np.eye(3)) / np.sqrt(3)
        assert nk.operator_norm(F) == pytest.approx(1.0, rel=1e-10)

    def test_closed_form_2x2(self):
        assert nk.operator_norm([[1, -1], [0, 0]]) == pytest.approx(np.sqrt(2), rel=1e-12)

    def test_rectangular(self):
        assert nk.operator_norm(np.ones((5, 1))) == pytest.approx(np.sqrt(5), rel=1e-12)


class TestExp:
    def test_zero_time(self):
        A = np.array([[1, 2], [3, 4]])
        assert np.array_equal(nk.matrix_exp(A, 0.0), np.eye(2))

    def test_diagonal(self):
        E = nk.matrix_exp(np.diag([-1, -2j]), 1.0)
        assert np.allclose(E, np.diag([np.exp(-1), np.exp(-2j)]), atol=1e-15)

    def test_nilpotent(self):
        A = np.array([[0, 1], [0, 0]])
        assert np.allclose(nk.matrix_exp(A, 1.0), np.eye(2) + A, atol=1e-15)

    def test_overflow(self):
        with pytest.raises(ExpOverflow):
            nk.matrix_exp(np.eye(2) * 1e5, 1.0)

    def test_negative_time(self):
        with pytest.raises(InvalidArgument):
            nk.matrix_exp(np.eye(2), -1.0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**31), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_semigroup_property(self, n, seed, s, t):
        A = rand_complex(np.random.default_rng(seed), n)
        A *= 5.0 / max(nk.operator_norm(A), 1e-300)  # ||A|| (s + t) <= 10
        lhs = nk.matrix_exp(A, s + t)
        rhs = nk.matrix_exp(A, s) @ nk.matrix_exp(A, t)
        assert np.linalg.norm(lhs - rhs) <= 1e-8 * max(np.linalg.norm(lhs), 1.0)
