import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncnet.exceptions import DisconnectedError, DomainError, ValidationError
from syncnet.linalg import condition_number, eigenvalues
from syncnet.network import (approx_diagonalizable, build_laplacian, complete_weights,
                             connectivity, counterexample_weights, defective_laplacian_example,
                             jordan_blocks, path_weights, ring_weights, spectral_gap,
                             weights_from_laplacian)


def sorted_spectrum(M):
    lam = eigenvalues(M)
    return lam[np.lexsort((lam.imag, lam.real))]


class TestBuildLaplacian:
    def test_counterexample(self):
        b = build_laplacian(counterexample_weights())
        np.testing.assert_array_equal(b.L, [[3, -2, -1], [0, 2, -2], [-1, 0, 1]])
        np.testing.assert_array_equal(b.intensities, [3, 2, 1])
        assert b.zero_multiplicity == 1

    def test_empty_network(self):
        b = build_laplacian(np.zeros((3, 3)))
        np.testing.assert_array_equal(b.L, 0)
        assert b.zero_multiplicity == 3

    def test_ring_spectrum(self):
        b = build_laplacian(ring_weights(3))
        np.testing.assert_allclose(np.sort(b.spectrum.real), [0, 3, 3], atol=1e-12)
        # characteristic polynomial of the 3-ring is x (x - 3)^2
        np.testing.assert_allclose(np.poly(b.L), [1, -6, 9, 0], atol=1e-12)

    def test_rows_sum_to_zero(self):
        W = np.random.default_rng(0).uniform(0, 3, (6, 6))
        np.fill_diagonal(W, 0)
        b = build_laplacian(W)
        assert np.abs(b.L @ np.ones(6)).max() <= 1e-12 * b.norm_inf

    def test_round_trip_weights(self):
        W = counterexample_weights()
        np.testing.assert_array_equal(weights_from_laplacian(build_laplacian(W).L), W)

    @pytest.mark.parametrize("W", [[[0, np.inf], [1, 0]], [[1, 0], [0, 0]], [[0, 1, 2]]])
    def test_invalid(self, W):
        with pytest.raises(ValidationError):
            build_laplacian(W)


class TestConnectivity:
    def test_counterexample(self):
        assert connectivity(counterexample_weights()) == 1

    def test_empty(self):
        assert connectivity(np.zeros((4, 4))) == 4

    def test_two_pairs(self):
        W = np.zeros((4, 4))
        W[0, 1] = W[1, 0] = W[2, 3] = W[3, 2] = 1.0
        assert connectivity(W) == 2

    def test_directed_edge_counts_weakly(self):
        W = np.zeros((2, 2))
        W[0, 1] = 1.0
        assert connectivity(W) == 1

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0.0, 0.8))
    def test_matches_zero_multiplicity(self, n, seed, density):
        rng = np.random.default_rng(seed)
        W = rng.uniform(0.5, 2.0, (n, n)) * (rng.random((n, n)) < density)
        W = np.triu(W, 1)
        W = W + W.T
        assert connectivity(W) == build_laplacian(W).zero_multiplicity


class TestSpectralGap:
    def test_ring(self):
        assert spectral_gap(build_laplacian(ring_weights(3))) == pytest.approx(3.0)

    def test_complete(self):
        assert spectral_gap(build_laplacian(complete_weights(4))) == pytest.approx(4.0)

    def test_path2(self):
        assert spectral_gap(build_laplacian(path_weights(2))) == pytest.approx(2.0)

    def test_disconnected_is_zero(self):
        b = build_laplacian(np.zeros((3, 3)))
        assert spectral_gap(b) == 0.0
        assert not b.is_connected

    def test_asymmetric(self):
        with pytest.raises(DomainError):
            spectral_gap(build_laplacian(counterexample_weights()))


class TestApproxDiagonalizable:
    def test_distinct_eigenvalues_keep_L(self):
        b = build_laplacian(counterexample_weights())
        a = approx_diagonalizable(b)
        np.testing.assert_array_equal(a.Ltilde, b.L)
        assert a.conjugated_error == 0.0
        np.testing.assert_allclose(a.P @ a.Lambda_tilde @ np.linalg.inv(a.P), b.L, atol=1e-12)

    def test_symmetric_keeps_L(self):
        b = build_laplacian(ring_weights(5))
        a = approx_diagonalizable(b)
        np.testing.assert_array_equal(a.Ltilde, b.L)

    def test_defective(self):
        L, O, J = defective_laplacian_example(2.0)
        b = build_laplacian(weights_from_laplacian(L))
        np.testing.assert_allclose(b.L, L, atol=1e-14)
        a = approx_diagonalizable(b, (O, J), eps=0.01)
        np.testing.assert_allclose(np.sort(eigenvalues(a.Ltilde).real), [0, 2.01, 2.02], atol=1e-9)
        np.testing.assert_allclose(a.Ltilde @ np.ones(3), 0, atol=1e-12)
        assert a.conjugated_error <= max(2 * 3 - 3, 3 - 1) * 0.01 + 1e-12
        # P diagonalises Ltilde and its first column spans the ones vector
        np.testing.assert_allclose(np.linalg.inv(a.P) @ a.Ltilde @ a.P, a.Lambda_tilde, atol=1e-9)
        v = a.P[:, 0] / np.linalg.norm(a.P[:, 0])
        np.testing.assert_allclose(np.abs(v), np.ones(3) / np.sqrt(3), atol=1e-8)
        assert np.isfinite(condition_number(a.P, "inf"))

    def test_defective_needs_factorisation(self):
        L, _, _ = defective_laplacian_example()
        with pytest.raises(ValidationError):
            approx_diagonalizable(build_laplacian(weights_from_laplacian(L)))

    def test_bad_factorisation(self):
        L, O, J = defective_laplacian_example()
        with pytest.raises(ValidationError):
            approx_diagonalizable(build_laplacian(weights_from_laplacian(L)), (O, J + np.eye(3)))

    def test_disconnected(self):
        with pytest.raises(DisconnectedError):
            approx_diagonalizable(build_laplacian(np.zeros((3, 3))))


class TestJordanBlocks:
    def test_split(self):
        J = np.array([[0, 0, 0], [0, 2, 1], [0, 0, 2]], dtype=float)
        assert jordan_blocks(J) == [(0, 1, 0j), (1, 2, 2 + 0j)]

    def test_not_jordan(self):
        with pytest.raises(ValidationError):
            jordan_blocks(np.array([[1.0, 0.5], [0, 1]]))
