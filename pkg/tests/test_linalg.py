import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from syncnet.exceptions import (ConsistencyError, DimensionError, RangeError,
                                SingularMatrixError, ValidationError)
from syncnet.linalg import (JordanPerturbationBasis, condition_number, conjugated_perturbation_norm,
                            eigendecomposition, eigenvalues, jordan_block,
                            jordan_perturbation_basis, kronecker, operator_norm)

L22 = np.array([[3.0, -2, -1], [0, 2, -2], [-1, 0, 1]])
G22 = np.array([[2.0, 1], [-17, 0]])


def match_error(a, b):
    """Largest distance under the best one-to-one matching of two multisets."""
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


class TestEigenvalues:
    def test_counterexample_laplacian(self):
        assert match_error(eigenvalues(L22), [0, 3 + 1j, 3 - 1j]) < 1e-9

    def test_counterexample_coupling(self):
        assert match_error(eigenvalues(G22), [1 + 4j, 1 - 4j]) < 1e-9

    def test_identity(self):
        np.testing.assert_allclose(eigenvalues(np.eye(2)), [1, 1])

    def test_characteristic_polynomial_vanishes(self):
        M = np.random.default_rng(3).standard_normal((6, 6))
        for lam in eigenvalues(M):
            smin = np.linalg.svd(M - lam * np.eye(6), compute_uv=False)[-1]
            assert smin < 1e-10 * np.linalg.norm(M, 2)

    def test_sorted_and_conjugate_closed(self):
        M = np.random.default_rng(0).standard_normal((7, 7))
        lam = eigenvalues(M)
        assert np.all(np.diff(lam.real) >= 0)
        assert abs(lam.imag.sum()) < 1e-9
        assert match_error(lam, lam.conj()) < 1e-9

    def test_non_square(self):
        with pytest.raises(DimensionError):
            eigenvalues(np.ones((2, 3)))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            eigenvalues([[1.0, np.nan], [0, 1]])

    def test_eigendecomposition_reconstructs(self):
        vals, vecs = eigendecomposition(L22)
        np.testing.assert_allclose(L22 @ vecs, vecs * vals, atol=1e-12)


class TestKronecker:
    def test_identity_factor_is_block_diagonal(self):
        B = np.array([[1.0, 2], [3, 4]])
        K = kronecker(np.eye(2), B)
        np.testing.assert_array_equal(K[:2, :2], B)
        np.testing.assert_array_equal(K[2:, 2:], B)
        np.testing.assert_array_equal(K[:2, 2:], 0)

    def test_scalar(self):
        np.testing.assert_array_equal(kronecker([[2]], [[3]]), [[6]])

    def test_matches_numpy_for_rectangular(self):
        rng = np.random.default_rng(1)
        A, B = rng.standard_normal((2, 3)), rng.standard_normal((4, 1))
        np.testing.assert_allclose(kronecker(A, B), np.kron(A, B))

    def test_counterexample_tensor_spectrum(self):
        prods = (eigenvalues(L22)[:, None] * eigenvalues(G22)[None, :]).ravel()
        lam = eigenvalues(kronecker(L22, G22))
        assert match_error(lam, prods) < 1e-9
        assert np.sum(np.abs(lam) < 1e-9) == 2

    @settings(max_examples=1000, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_spectrum_is_pairwise_products(self, p, q, seed):
        rng = np.random.default_rng(seed)
        A = rng.uniform(-1, 1, (p, p))
        B = rng.uniform(-1, 1, (q, q))
        prods = (eigenvalues(A)[:, None] * eigenvalues(B)[None, :]).ravel()
        assert match_error(eigenvalues(kronecker(A, B)), prods) < 1e-8


class TestNorms:
    def test_inf_norm(self):
        assert operator_norm([[1, -2], [3, 4]], "inf") == 7

    def test_two_norm_identity(self):
        assert operator_norm(np.eye(3), "two") == pytest.approx(1.0)

    def test_two_norm_diagonal(self):
        assert operator_norm([[3, 0], [0, -5]], "two") == pytest.approx(5.0)

    def test_two_norm_matches_svd(self):
        M = np.random.default_rng(2).standard_normal((5, 3))
        assert operator_norm(M, "two") == pytest.approx(np.linalg.norm(M, 2), rel=1e-12)

    def test_bad_selector(self):
        with pytest.raises(ValidationError):
            operator_norm(np.eye(2), "fro")


class TestConditionNumber:
    def test_identity(self):
        assert condition_number(np.eye(3), "inf") == 1.0
        assert condition_number(np.eye(3), "two") == 1.0

    def test_orthogonal(self):
        Q, _ = np.linalg.qr(np.random.default_rng(4).standard_normal((4, 4)))
        assert condition_number(Q, "two") == pytest.approx(1.0, abs=1e-12)

    def test_jordan_basis(self):
        R = jordan_perturbation_basis(2, 0.0, 0.1).R
        assert condition_number(R, "inf") == pytest.approx(22.0)

    def test_singular_carries_sigma_min(self):
        with pytest.raises(SingularMatrixError) as info:
            condition_number([[1.0, 2], [2, 4]])
        assert info.value.sigma_min < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.sampled_from(["inf", "two"]))
    def test_at_least_one(self, n, seed, p):
        M = np.random.default_rng(seed).standard_normal((n, n))
        assert condition_number(M, p) >= 1.0


class TestJordanBasis:
    def test_m2_closed_form(self):
        eps = 0.25
        b = jordan_perturbation_basis(2, 1.5 + 2j, eps)
        np.testing.assert_allclose(b.R, [[1, 1], [0, eps]])
        np.testing.assert_allclose(b.Rinv, [[1, -1 / eps], [0, 1 / eps]])
        np.testing.assert_allclose(b.diag, [1.5 + 2j, 1.75 + 2j])
        np.testing.assert_allclose(b.R @ b.Rinv, np.eye(2))

    def test_m1(self):
        b = jordan_perturbation_basis(1, 4.0, 0.3)
        np.testing.assert_array_equal(b.R, [[1.0]])
        assert b.bound == 0.0
        assert conjugated_perturbation_norm(b) == 0.0

    def test_m3_norm(self):
        assert conjugated_perturbation_norm(jordan_perturbation_basis(3, 0, 0.01)) == pytest.approx(0.03)

    def test_m2_norm(self):
        assert conjugated_perturbation_norm(jordan_perturbation_basis(2, 0, 0.5)) == pytest.approx(0.5)

    @pytest.mark.parametrize("m", range(1, 9))
    @pytest.mark.parametrize("eps", [1e-3, 1e-1, 1.0])
    def test_identities(self, m, eps):
        lam = 0.7 - 0.2j
        b = jordan_perturbation_basis(m, lam, eps)
        kappa = b.kappa_inf
        assert np.abs(b.R @ b.Rinv - np.eye(m)).max() <= 1e-9 * kappa
        assert np.allclose(np.tril(b.R, -1), 0)
        D = b.Rinv @ (b.J + b.E) @ b.R
        off = D - np.diag(np.diag(D))
        assert np.abs(off).max() <= 1e-9 * kappa
        np.testing.assert_allclose(np.diag(D), lam + eps * np.arange(m), atol=1e-9 * kappa)
        conj = b.Rinv @ b.E @ b.R
        np.testing.assert_allclose(np.diag(conj), eps * np.arange(m), atol=1e-9 * kappa)
        np.testing.assert_allclose(np.diag(conj, 1), -eps * np.arange(1, m), atol=1e-9 * kappa)
        assert abs(operator_norm(conj, "inf") - max(2 * m - 3, m - 1) * eps) <= 1e-10

    def test_kappa_matches_condition_number_when_invertible(self):
        b = jordan_perturbation_basis(4, 0, 0.1)
        assert b.kappa_inf == pytest.approx(condition_number(b.R, "inf"), rel=1e-12)

    def test_too_large(self):
        with pytest.raises(RangeError):
            jordan_perturbation_basis(13, 0, 1.0)

    @pytest.mark.parametrize("eps", [0.0, -1.0, np.inf])
    def test_bad_eps(self, eps):
        with pytest.raises(ValidationError):
            jordan_perturbation_basis(2, 0, eps)

    def test_inconsistent_bound_detected(self):
        b = jordan_perturbation_basis(3, 0, 0.1)
        forged = JordanPerturbationBasis(b.m, b.lam, b.eps, b.R, b.Rinv, b.diag, b.bound * 2)
        with pytest.raises(ConsistencyError):
            conjugated_perturbation_norm(forged)

    def test_jordan_block(self):
        np.testing.assert_array_equal(jordan_block(3, 2.0), [[2, 1, 0], [0, 2, 1], [0, 0, 2]])
