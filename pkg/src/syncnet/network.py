"""Graph Laplacians of weighted, possibly directed, networks."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from ._config import TOL
from .exceptions import DisconnectedError, DomainError, ValidationError
from .linalg import (eigendecomposition, eigenvalues,
                     jordan_perturbation_basis, operator_norm)
from .validation import check_matrix, check_weights, is_symmetric

__all__ = [
    "LaplacianBundle", "DiagonalizableApproximation", "build_laplacian",
    "connectivity", "spectral_gap", "approx_diagonalizable", "jordan_blocks",
    "ring_weights", "complete_weights", "path_weights", "counterexample_weights",
    "defective_laplacian_example", "weights_from_laplacian",
]


@dataclass(frozen=True)
class LaplacianBundle:
    """Laplacian ``L = V - W`` together with its spectrum.

    Attributes
    ----------
    L : ndarray, shape (n, n)
    intensities : ndarray, shape (n,)
        Row sums ``V_i`` of the weight matrix.
    spectrum : ndarray of complex, shape (n,)
    zero_multiplicity : int
        Number of eigenvalues with ``|lambda| <= tol_zero``.
    tol_zero : float
    """

    L: np.ndarray
    intensities: np.ndarray
    spectrum: np.ndarray
    zero_multiplicity: int
    tol_zero: float

    @property
    def n(self):
        return self.L.shape[0]

    @property
    def norm_inf(self):
        return operator_norm(self.L, "inf")

    @property
    def is_connected(self):
        return self.zero_multiplicity == 1

    @property
    def is_symmetric(self):
        return is_symmetric(self.L, TOL.symmetry_rel)

    @property
    def tol_distinct(self):
        return TOL.distinct_rel * max(self.norm_inf, np.finfo(float).tiny)


@dataclass(frozen=True)
class DiagonalizableApproximation:
    """Diagonalisable stand-in ``Ltilde = P Lambda_tilde P^-1`` for a Laplacian.

    ``conjugated_error`` is ``||P^-1 (Ltilde - L) P||_inf``.
    """

    Ltilde: np.ndarray
    P: np.ndarray
    Lambda_tilde: np.ndarray
    eps: float
    conjugated_error: float
    R: np.ndarray = None


def build_laplacian(W):
    """Laplacian bundle of a weight matrix.

    ``L[i, j] = delta_ij V_i - W[i, j]`` with ``V_i = sum_j W[i, j]``, where
    ``W[i, j]`` is the strength with which node ``j`` acts on node ``i``.
    """
    W = check_weights(W)
    V = W.sum(axis=1)
    L = np.diag(V) - W
    norm = operator_norm(L, "inf")
    spectrum = eigenvalues(L)
    tol_zero = TOL.zero_rel * norm
    zero_mult = int(np.count_nonzero(np.abs(spectrum) <= tol_zero))
    return LaplacianBundle(L=L, intensities=V, spectrum=spectrum,
                           zero_multiplicity=zero_mult, tol_zero=tol_zero)


def connectivity(W):
    """Number of weakly connected components of the graph of ``W``.

    Nodes ``i`` and ``j`` are adjacent when ``|W_ij| + |W_ji| > 0``. For
    symmetric non-negative weights the count is cross-checked against the
    multiplicity of the zero Laplacian eigenvalue when that eigenvalue is
    well separated from the rest of the spectrum.
    """
    W = check_weights(W)
    adj = (np.abs(W) + np.abs(W.T)) > 0
    count, _ = connected_components(adj, directed=False)
    if np.all(W >= 0) and is_symmetric(W, TOL.symmetry_rel):
        bundle = build_laplacian(W)
        lam = np.sort(np.abs(bundle.spectrum))
        k = bundle.zero_multiplicity
        separated = k == len(lam) or lam[k] > bundle.tol_distinct
        if separated and k != count:
            warnings.warn(f"graph search finds {count} components but the Laplacian has a "
                          f"{k}-fold zero eigenvalue", RuntimeWarning, stacklevel=2)
    return int(count)


def spectral_gap(bundle):
    """Smallest non-zero eigenvalue ``lambda_2`` of a symmetric Laplacian.

    Returns 0.0 for a disconnected network; ``bundle.is_connected`` is the
    corresponding flag.

    Raises
    ------
    DomainError
        If the Laplacian is not symmetric (its spectrum need not be real).
    """
    if not bundle.is_symmetric:
        raise DomainError("spectral gap requires a symmetric Laplacian")
    if bundle.n == 1 or not bundle.is_connected:
        return 0.0
    vals = np.linalg.eigvalsh(bundle.L)
    return float(vals[1])


def jordan_blocks(J, tol=0.0):
    """Split a matrix in Jordan canonical form into ``(start, size, eigenvalue)``.

    Raises ``ValidationError`` if ``J`` is not upper bidiagonal with unit
    superdiagonal entries linking equal eigenvalues.
    """
    J = np.asarray(J)
    n = J.shape[0]
    off = J - np.diag(np.diag(J)) - np.diag(np.diag(J, 1), 1)
    if np.any(np.abs(off) > tol):
        raise ValidationError("J is not upper bidiagonal")
    sup = np.diag(J, 1)
    blocks = []
    start = 0
    for i in range(n - 1):
        if abs(sup[i] - 1) <= tol:
            if abs(J[i, i] - J[i + 1, i + 1]) > tol:
                raise ValidationError(f"J links unequal eigenvalues at position {i}")
        elif abs(sup[i]) <= tol:
            blocks.append((start, i + 1 - start, complex(J[start, start])))
            start = i + 1
        else:
            raise ValidationError(f"J superdiagonal entry {sup[i]!r} is neither 0 nor 1")
    blocks.append((start, n - start, complex(J[start, start])))
    return blocks


def _realify(M, scale):
    if np.iscomplexobj(M) and np.abs(M.imag).max() <= 1e-12 * max(scale, 1.0):
        return M.real.copy()
    return M


def approx_diagonalizable(bundle, jordan_form=None, eps=1e-2):
    """Diagonalisable approximation of a Laplacian with a simple zero eigenvalue.

    If the eigenvalues of ``L`` are pairwise distinct (or ``L`` is symmetric)
    the Laplacian itself is returned with its eigenvector matrix. Otherwise
    the caller supplies ``jordan_form=(O, J)`` with ``L = O J O^-1``, ``J`` in
    Jordan form and its first block the simple zero. Then

        E      = diag(0, eps, 2 eps, ..., (n-1) eps)
        Ltilde = O (J + E) O^-1,     P = O R

    where ``R`` is block diagonal with one closed-form Jordan basis per block.
    ``conjugated_error = ||R^-1 E R||_inf <= max(2n-3, n-1) eps``.

    Raises
    ------
    DisconnectedError
        If zero is not a simple eigenvalue.
    ValidationError
        If a defective Laplacian arrives without a factorisation, or the
        supplied factorisation does not reproduce ``L``.
    """
    if not bundle.is_connected:
        raise DisconnectedError(f"zero eigenvalue has multiplicity {bundle.zero_multiplicity}")
    if not np.isfinite(eps) or eps <= 0:
        raise ValidationError(f"eps must be > 0, got {eps!r}")
    L = bundle.L
    n = bundle.n
    scale = max(bundle.norm_inf, 1.0)
    if jordan_form is None:
        lam = bundle.spectrum
        gaps = np.abs(lam[:, None] - lam[None, :]) + np.diag(np.full(n, np.inf))
        distinct = n == 1 or gaps.min() > bundle.tol_distinct
        if distinct or bundle.is_symmetric:
            vals, P = eigendecomposition(L)
            return DiagonalizableApproximation(Ltilde=L.copy(), P=P, Lambda_tilde=np.diag(vals),
                                               eps=float(eps), conjugated_error=0.0)
        raise ValidationError("Laplacian has repeated eigenvalues; supply its Jordan "
                              "factorisation (O, J) with L = O J O^-1")

    O = check_matrix(jordan_form[0], "O", square=True, allow_complex=True)
    J = check_matrix(jordan_form[1], "J", square=True, allow_complex=True)
    if O.shape != L.shape or J.shape != L.shape:
        raise ValidationError(f"O and J must be {n}x{n}, got {O.shape} and {J.shape}")
    Oinv = np.linalg.inv(O)
    resid = operator_norm(L - O @ J @ Oinv, "inf")
    if resid > TOL.factorisation_rel * scale:
        raise ValidationError(f"(O, J) does not factorise L: residual {resid:.3e}")
    blocks = jordan_blocks(J, tol=TOL.factorisation_rel * scale)
    if blocks[0][1] != 1 or abs(blocks[0][2]) > bundle.tol_zero:
        raise ValidationError("first Jordan block must be the 1x1 zero block")

    E = np.diag(eps * np.arange(n, dtype=float))
    R = np.zeros((n, n))
    Rinv = np.zeros((n, n))
    for start, size, lam in blocks:
        basis = jordan_perturbation_basis(size, lam + start * eps, eps)
        sl = slice(start, start + size)
        R[sl, sl] = basis.R
        Rinv[sl, sl] = basis.Rinv
    Ltilde = _realify(O @ (J + E) @ Oinv, scale)
    P = O @ R
    conj_err = operator_norm(Rinv @ E @ R, "inf")
    bound = max(2 * n - 3, n - 1) * eps
    if conj_err > bound * (1 + 1e-9) + 1e-12:
        raise ValidationError(f"conjugated error {conj_err:.3e} exceeds {bound:.3e}")
    if operator_norm((Ltilde @ np.ones(n))[:, None], "inf") > TOL.factorisation_rel * scale:
        raise ValidationError("first column of O is not parallel to the all-ones vector")
    return DiagonalizableApproximation(Ltilde=Ltilde, P=P, Lambda_tilde=np.diag(np.diag(J + E)),
                                       eps=float(eps), conjugated_error=conj_err, R=R)


def ring_weights(n, weight=1.0):
    """Undirected cycle on ``n`` nodes."""
    W = np.zeros((n, n))
    for i in range(n):
        W[i, (i + 1) % n] = W[(i + 1) % n, i] = weight
    return W


def complete_weights(n, weight=1.0):
    return weight * (np.ones((n, n)) - np.eye(n))


def path_weights(n, weight=1.0):
    W = np.zeros((n, n))
    for i in range(n - 1):
        W[i, i + 1] = W[i + 1, i] = weight
    return W


def counterexample_weights():
    """Directed 3-node network whose Laplacian has eigenvalues ``0, 3 +- i``."""
    W = np.zeros((3, 3))
    W[0, 1], W[0, 2], W[1, 2], W[2, 0] = 2.0, 1.0, 2.0, 1.0
    return W


def weights_from_laplacian(L):
    """Weight matrix ``W = diag(L) - L`` of a zero-row-sum matrix."""
    L = check_matrix(L, "L", square=True)
    return np.diag(np.diag(L)) - L


def defective_laplacian_example(lam=2.0):
    """A 3-node Laplacian with a 2x2 Jordan block at ``lam``.

    Returns ``(L, O, J)`` with ``L = O J O^-1``; the first column of ``O`` is
    the all-ones vector, so ``L`` has zero row sums.
    """
    J = np.array([[0.0, 0.0, 0.0], [0.0, lam, 1.0], [0.0, 0.0, lam]])
    O = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    L = O @ J @ np.linalg.inv(O)
    return L, O, J
