"""Small dense matrix algebra.

Spectra, Kronecker products, operator norms and condition numbers, plus the
closed-form eigenvector basis of a perturbed Jordan block

    J + E,   E = diag(0, eps, 2 eps, ..., (m-1) eps),

whose eigenvalues ``lam + (i-1) eps`` are distinct, so ``J + E`` is
diagonalisable with an explicit upper-triangular eigenvector matrix ``R``.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from ._config import TOL
from .exceptions import (ConsistencyError, NumericalError, RangeError,
                         SingularMatrixError, ValidationError)
from .validation import check_matrix

__all__ = [
    "eigenvalues", "eigendecomposition", "kronecker", "operator_norm",
    "condition_number", "jordan_block", "JordanPerturbationBasis",
    "jordan_perturbation_basis", "conjugated_perturbation_norm",
]


def eigenvalues(M):
    """All eigenvalues of a square matrix, with algebraic multiplicity.

    LAPACK ``geev`` (Hessenberg reduction followed by shifted QR) does the
    work. The result is sorted lexicographically by (real, imag) so that the
    output is deterministic; for real input it is conjugate-symmetric.

    Parameters
    ----------
    M : array_like, shape (d, d)

    Returns
    -------
    ndarray of complex, shape (d,)

    Raises
    ------
    DimensionError
        If ``M`` is not square.
    NumericalError
        If the QR iteration fails to converge.
    """
    M = check_matrix(M, "M", square=True, allow_complex=True)
    try:
        vals = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge for {M.shape[0]}x{M.shape[0]} "
                             f"matrix with ||M||_inf = {operator_norm(M, 'inf'):.3g}: {exc}") from None
    return np.sort_complex(vals.astype(complex))


def eigendecomposition(M):
    """Eigenvalues and right eigenvectors (unit 2-norm columns).

    Symmetric real input goes through ``eigh`` so the eigenvector matrix is
    orthogonal; everything else through ``eig``.
    """
    M = check_matrix(M, "M", square=True, allow_complex=True)
    try:
        if not np.iscomplexobj(M) and np.array_equal(M, M.T):
            vals, vecs = np.linalg.eigh(M)
            return vals.astype(complex), vecs.astype(complex)
        vals, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from None
    order = np.lexsort((vals.imag, vals.real))
    return vals[order].astype(complex), vecs[:, order].astype(complex)


def kronecker(A, B):
    """Kronecker product ``A (x) B`` of two (possibly rectangular) matrices.

    Entry ``(i*q + k, j*r + l)`` of the result is ``A[i, j] * B[k, l]`` for
    ``A`` of shape ``(p, s)`` and ``B`` of shape ``(q, r)``.
    """
    A = check_matrix(A, "A", allow_complex=True)
    B = check_matrix(B, "B", allow_complex=True)
    p, s = A.shape
    q, r = B.shape
    return (A[:, None, :, None] * B[None, :, None, :]).reshape(p * q, s * r)


def _norm_kind(p):
    if p in ("two", 2):
        return "two"
    if p in ("inf", np.inf, float("inf")):
        return "inf"
    raise ValidationError(f"norm selector must be 'two' or 'inf', got {p!r}")


def operator_norm(M, p="inf"):
    """Induced operator norm.

    ``p='inf'`` is the maximum absolute row sum, ``p='two'`` the largest
    singular value, obtained as the square root of the largest eigenvalue of
    ``M^H M``.
    """
    M = check_matrix(M, "M", allow_complex=True)
    if _norm_kind(p) == "inf":
        return float(np.abs(M).sum(axis=1).max())
    gram = M.conj().T @ M
    return float(np.sqrt(max(np.linalg.eigvalsh(gram).max(), 0.0)))


def condition_number(M, p="inf"):
    """``||M||_p * ||M^-1||_p``; always at least 1.

    Raises
    ------
    SingularMatrixError
        When the smallest singular value is below ``1e-12 * ||M||_2``; the
        exception carries that singular value.
    """
    M = check_matrix(M, "M", square=True, allow_complex=True)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] < TOL.singular_rel * sv[0] or sv[0] == 0:
        raise SingularMatrixError(f"matrix is numerically singular (sigma_min = {sv[-1]:.3e})",
                                  sigma_min=float(sv[-1]))
    if _norm_kind(p) == "two":
        kappa = sv[0] / sv[-1]
    else:
        kappa = operator_norm(M, "inf") * operator_norm(np.linalg.inv(M), "inf")
    return max(float(kappa), 1.0)


def jordan_block(m, lam):
    """``m x m`` Jordan block with eigenvalue ``lam`` and ones above the diagonal."""
    lam = complex(lam)
    J = np.diag(np.full(m, lam)) + np.diag(np.ones(m - 1), 1)
    return J.real.copy() if lam.imag == 0 else J


@dataclass(frozen=True)
class JordanPerturbationBasis:
    """Eigenvector basis of a Jordan block perturbed by ``diag(0, eps, ...)``.

    Attributes
    ----------
    m : int
        Block dimension.
    lam : complex
        Eigenvalue of the unperturbed block.
    eps : float
        Perturbation scale.
    R, Rinv : ndarray, shape (m, m)
        Upper-triangular eigenvector matrix and its closed-form inverse.
    diag : ndarray of complex
        Eigenvalues of ``J + E``, i.e. ``lam + (i-1) eps``.
    bound : float
        ``max(2m-3, m-1) * eps``, the row-sum norm of ``Rinv E R``.
    """

    m: int
    lam: complex
    eps: float
    R: np.ndarray
    Rinv: np.ndarray
    diag: np.ndarray
    bound: float

    @property
    def J(self):
        return jordan_block(self.m, self.lam)

    @property
    def E(self):
        return np.diag(self.eps * np.arange(self.m, dtype=float))

    @property
    def kappa_inf(self):
        """``||R||_inf ||Rinv||_inf`` from the closed forms, without inversion.

        Usable where :func:`condition_number` refuses ``R`` as numerically
        singular (small ``eps`` and large ``m``).
        """
        return operator_norm(self.R, "inf") * operator_norm(self.Rinv, "inf")


def jordan_perturbation_basis(m, lam=0.0, eps=1.0):
    """Closed-form diagonalising basis of ``J + E`` for an ``m``-dim block.

    With 1-based indices the entries are

        R[l, j]    = (j-1)! / (j-l)! * eps**(l-1)                 (l <= j)
        Rinv[i, k] = (-1)**(i+k) / ((i-1)! (k-i)!) * eps**-(k-1)  (i <= k)

    and zero below the diagonal. Factorial ratios are formed exactly in
    integer/rational arithmetic before conversion to float.

    Raises
    ------
    RangeError
        If ``m`` exceeds the block size for which factorials are exact.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValidationError(f"block dimension m must be a positive integer, got {m!r}")
    m = int(m)
    if m > TOL.max_jordan_block:
        raise RangeError(f"m = {m} exceeds the supported block size {TOL.max_jordan_block}")
    if not np.isfinite(eps) or eps <= 0:
        raise ValidationError(f"eps must be > 0, got {eps!r}")
    eps = float(eps)
    R = np.zeros((m, m))
    Rinv = np.zeros((m, m))
    for l in range(1, m + 1):
        for j in range(l, m + 1):
            R[l - 1, j - 1] = float(factorial(j - 1) // factorial(j - l)) * eps ** (l - 1)
    for i in range(1, m + 1):
        for k in range(i, m + 1):
            coef = Fraction((-1) ** (i + k), factorial(i - 1) * factorial(k - i))
            Rinv[i - 1, k - 1] = float(coef) * eps ** (-(k - 1))
    diag = complex(lam) + eps * np.arange(m, dtype=complex)
    bound = max(2 * m - 3, m - 1) * eps
    return JordanPerturbationBasis(m=m, lam=complex(lam), eps=eps, R=R, Rinv=Rinv,
                                   diag=diag, bound=float(bound))


def conjugated_perturbation_norm(basis):
    """``||Rinv E R||_inf`` computed explicitly, checked against ``basis.bound``.

    Raises
    ------
    ConsistencyError
        If the computed norm and the closed-form bound differ by more than
        ``1e-10`` (scaled by the bound when it exceeds one).
    """
    conj = basis.Rinv @ basis.E @ basis.R
    value = operator_norm(conj, "inf")
    if abs(value - basis.bound) > TOL.algebraic * max(1.0, basis.bound):
        raise ConsistencyError(f"||Rinv E R||_inf = {value!r} but closed form gives {basis.bound!r} "
                               f"(m={basis.m}, eps={basis.eps})")
    return value
