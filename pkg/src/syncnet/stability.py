"""Synchronisability certificates.

Given a Laplacian ``L`` with eigenvalues ``lambda_i`` and a coupling
linearisation ``Gamma`` with eigenvalues ``beta_j``, the network synchronises
at exponential rate ``alpha * gamma - rho`` whenever ``alpha > rho / gamma``,
where

    gamma = min_{i >= 2, j} Re(lambda_i beta_j)

(the zero eigenvalue of ``L`` excluded) and ``rho`` bounds the Jacobian of
the isolated dynamics in the eigenbasis of ``Gamma``. The norm-equivalence
factor ``c`` and the diagonal-dominance constant ``K`` are never fixed by the
theory; they are explicit arguments and are echoed in every result.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._config import TOL
from .exceptions import (DisconnectedError, DomainError,
                         SingularMatrixError, SpectralConsistencyError,
                         ValidationError)
from .linalg import (condition_number, eigendecomposition, eigenvalues,
                     jordan_perturbation_basis, operator_norm)
from .network import approx_diagonalizable, jordan_blocks
from .validation import check_matrix, is_symmetric

__all__ = [
    "CouplingSpec", "RhoBound", "SyncAnalysis", "PersistenceBound",
    "coupling_spec", "compute_gamma", "rho_bound", "alpha_threshold", "analyze",
    "diagonal_dominance_margin", "roughness_adjust", "persistence_bound",
    "delta_estimate", "jacobian_bound",
]

# eigenvector matrices worse conditioned than this are treated as defective
_DEFECTIVE_KAPPA = 1e8


@dataclass(frozen=True)
class CouplingSpec:
    """Linearised coupling ``Gamma = Dh(0)`` and its spectral data.

    ``Q`` diagonalises ``Gamma`` (``Gamma = Q B Q^-1``) when ``diagonalizable``;
    for a defective ``Gamma`` supplied in Jordan form, ``Gamma = Q J Q^-1`` and
    ``J`` is kept in ``jordan``.
    """

    Gamma: np.ndarray
    beta_spectrum: np.ndarray
    beta_min: float
    diagonalizable: bool
    symmetric: bool
    Q: np.ndarray = None
    jordan: np.ndarray = None

    @property
    def m(self):
        return self.Gamma.shape[0]

    @property
    def kappa_Q(self):
        """``kappa_2(Q)``; exactly 1 for symmetric ``Gamma``."""
        if self.symmetric:
            return 1.0
        if self.Q is None:
            return math.inf
        return condition_number(self.Q, "two")


def _is_jordan_form(G):
    try:
        blocks = jordan_blocks(G)
    except ValidationError:
        return False
    return any(size > 1 for _, size, _ in blocks)


def coupling_spec(Gamma, jordan_form=None):
    """Build a :class:`CouplingSpec`.

    Parameters
    ----------
    Gamma : array_like, shape (m, m)
    jordan_form : tuple (Q, J), optional
        Factorisation ``Gamma = Q J Q^-1`` with ``J`` in Jordan form. Needed
        only for defective ``Gamma`` that are not already in Jordan form.
    """
    G = check_matrix(Gamma, "Gamma", square=True)
    spectrum = eigenvalues(G)
    beta_min = float(spectrum.real.min())
    symmetric = is_symmetric(G, TOL.symmetry_rel)
    scale = max(operator_norm(G, "inf"), 1.0)
    if jordan_form is not None:
        Q = check_matrix(jordan_form[0], "Q", square=True, allow_complex=True)
        J = check_matrix(jordan_form[1], "J", square=True, allow_complex=True)
        if Q.shape != G.shape or J.shape != G.shape:
            raise ValidationError("Q and J must have the shape of Gamma")
        resid = operator_norm(G - Q @ J @ np.linalg.inv(Q), "inf")
        if resid > TOL.factorisation_rel * scale:
            raise ValidationError(f"(Q, J) does not factorise Gamma: residual {resid:.3e}")
        blocks = jordan_blocks(J, tol=TOL.factorisation_rel * scale)
        diag = all(size == 1 for _, size, _ in blocks)
        return CouplingSpec(G, spectrum, beta_min, diag, symmetric, Q=Q, jordan=None if diag else J)
    if symmetric:
        _, Q = eigendecomposition(G)
        return CouplingSpec(G, spectrum, beta_min, True, True, Q=Q)
    if _is_jordan_form(G):
        return CouplingSpec(G, spectrum, beta_min, False, False, Q=np.eye(G.shape[0]), jordan=G.copy())
    _, Q = eigendecomposition(G)
    try:
        kappa = condition_number(Q, "two")
    except SingularMatrixError:
        kappa = math.inf
    if kappa < _DEFECTIVE_KAPPA:
        return CouplingSpec(G, spectrum, beta_min, True, False, Q=Q)
    return CouplingSpec(G, spectrum, beta_min, False, False)


def compute_gamma(laplacian, coupling):
    """``min Re(lambda_i beta_j)`` over non-zero Laplacian eigenvalues.

    Exactly one Laplacian eigenvalue, the one of smallest modulus, is
    excluded and must be numerically zero.

    Raises
    ------
    DisconnectedError
        If the zero eigenvalue is not simple.
    SpectralConsistencyError
        If the excluded eigenvalue is not within ``tol_zero`` of zero.
    """
    if laplacian.zero_multiplicity != 1:
        raise DisconnectedError(f"Laplacian has a {laplacian.zero_multiplicity}-fold zero "
                                "eigenvalue; gamma is defined for connected networks only")
    lam = laplacian.spectrum
    k = int(np.argmin(np.abs(lam)))
    if abs(lam[k]) > laplacian.tol_zero:
        raise SpectralConsistencyError(f"smallest Laplacian eigenvalue {lam[k]} is not zero")
    rest = np.delete(lam, k)
    if rest.size == 0:
        raise DisconnectedError("a single node has no transverse directions")
    return float(np.min((rest[:, None] * coupling.beta_spectrum[None, :]).real))


@dataclass(frozen=True)
class RhoBound:
    """Analytic bound on ``rho`` with every constant that went into it."""

    value: float
    c: float
    varrho: float
    kappa_Q: float
    kappa_P: float
    eps: float
    branch: str

    def __float__(self):
        return self.value


def rho_bound(varrho, coupling, jordan_eps_ratio=0.5, c=1.0):
    """Conservative bound on ``rho(f, Gamma)``.

    * symmetric ``Gamma``: ``c * varrho`` (orthogonal ``Q``),
    * diagonalisable ``Gamma``: ``c * varrho * kappa_2(Q)``,
    * defective ``Gamma``: ``c * varrho * kappa_2(Q) * kappa_inf(P)`` where
      ``P`` diagonalises ``J + E`` at ``eps = jordan_eps_ratio * beta_min``;
      ``kappa(P)`` grows like ``eps**-(m-1)``.

    Raises
    ------
    DomainError
        In the defective branch when ``beta_min <= 0``.
    """
    if not np.isfinite(varrho) or varrho <= 0:
        raise ValidationError(f"varrho must be > 0, got {varrho!r}")
    if not 0 < jordan_eps_ratio < 1:
        raise ValidationError(f"jordan_eps_ratio must lie in (0, 1), got {jordan_eps_ratio!r}")
    if coupling.symmetric:
        return RhoBound(c * varrho, c, varrho, 1.0, 1.0, 0.0, "symmetric")
    if coupling.diagonalizable:
        kq = coupling.kappa_Q
        return RhoBound(c * varrho * kq, c, varrho, kq, 1.0, 0.0, "diagonalizable")
    if coupling.jordan is None:
        raise ValidationError("Gamma is defective; supply its Jordan factorisation (Q, J)")
    if coupling.beta_min <= 0:
        raise DomainError(f"beta_min = {coupling.beta_min} <= 0: perturbed eigenvalues would "
                          "cross the imaginary axis")
    eps = jordan_eps_ratio * coupling.beta_min
    m = coupling.m
    P = np.zeros((m, m))
    for start, size, lam in jordan_blocks(coupling.jordan, tol=1e-12):
        P[start:start + size, start:start + size] = jordan_perturbation_basis(size, lam, eps).R
    kp = condition_number(P, "inf")
    kq = condition_number(coupling.Q, "two")
    return RhoBound(c * varrho * kq * kp, c, varrho, kq, kp, eps, "defective")


@dataclass(frozen=True)
class SyncAnalysis:
    """Synchronisation certificate.

    ``alpha_threshold`` is ``rho_bound / gamma`` when ``gamma > 0`` and
    ``None`` otherwise.
    """

    gamma: float
    rho_bound: float
    varrho: float
    alpha_threshold: float
    C_estimate: float
    a3_satisfied: bool
    c: float = 1.0
    K: float = 1.0
    kappa_P: float = 1.0
    kappa_Q: float = 1.0

    def rate(self, alpha):
        """Guaranteed contraction rate ``alpha * gamma - rho`` (negative: none)."""
        return alpha * self.gamma - self.rho_bound

    def to_dict(self, alpha=None):
        out = asdict(self)
        out["rate_at_alpha"] = None if alpha is None else self.rate(alpha)
        return out


def alpha_threshold(gamma, rho, *, varrho=math.nan, kappa_P=1.0, kappa_Q=1.0, K=1.0, c=1.0):
    """Assemble a :class:`SyncAnalysis` from ``gamma`` and a ``rho`` bound.

    ``C_estimate = K * kappa_inf(P) * kappa_2(Q)``. A non-positive ``gamma``
    is not an error: the result simply reports ``a3_satisfied = False``.
    """
    rho = float(rho)
    ok = gamma > 0
    return SyncAnalysis(
        gamma=float(gamma), rho_bound=rho, varrho=float(varrho),
        alpha_threshold=rho / gamma if ok else None,
        C_estimate=max(K * kappa_P * kappa_Q, 1.0), a3_satisfied=bool(ok),
        c=float(c), K=float(K), kappa_P=float(kappa_P), kappa_Q=float(kappa_Q))


def _laplacian_kappa(laplacian, laplacian_jordan, eps_L):
    if laplacian.is_symmetric:
        return 1.0
    try:
        approx = approx_diagonalizable(laplacian, laplacian_jordan, eps_L)
        return condition_number(approx.P, "inf")
    except (ValidationError, DisconnectedError, SingularMatrixError):
        return math.inf


def analyze(laplacian, coupling, varrho, *, jordan_eps_ratio=0.5, c=1.0, K=1.0,
            laplacian_jordan=None, eps_L=1e-2):
    """Full certificate for a network: gamma, rho bound, threshold, constants.

    ``kappa_P`` is measured on the eigenvector matrix of the Laplacian (or of
    its diagonalisable approximation when ``laplacian_jordan`` is given); it is
    1 for symmetric Laplacians, which admit an orthogonal eigenbasis.
    """
    gamma = compute_gamma(laplacian, coupling)
    rb = rho_bound(varrho, coupling, jordan_eps_ratio, c)
    kappa_P = _laplacian_kappa(laplacian, laplacian_jordan, eps_L)
    return alpha_threshold(gamma, rb.value, varrho=varrho, kappa_P=kappa_P,
                           kappa_Q=rb.kappa_Q, K=K, c=c)


def diagonal_dominance_margin(A_samples, alpha, lambda_i, B_diag):
    """Diagonal-dominance certificate ``mu`` for ``A(t) - alpha lambda_i B``.

    ``mu = -max_{samples, k} [Re(A_kk - alpha lambda_i beta_k) + sum_{j != k} |A_kj|]``.
    A positive value certifies uniform exponential stability at rate ``mu``
    over the sampled window.
    """
    samples = list(A_samples)
    if not samples:
        raise DomainError("diagonal dominance needs at least one sample")
    shift = alpha * complex(lambda_i) * np.asarray(B_diag, dtype=complex)
    worst = -math.inf
    for A in samples:
        A = np.asarray(A, dtype=complex)
        if A.shape != (shift.size, shift.size):
            raise ValidationError(f"sample has shape {A.shape}, expected {(shift.size,) * 2}")
        off = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
        rows = (np.diag(A) - shift).real + off
        worst = max(worst, float(rows.max()))
    return -worst


def roughness_adjust(mu, K, delta_pert):
    """Rate ``mu - delta * K`` surviving a perturbation of size ``delta``."""
    return mu - delta_pert * K


@dataclass(frozen=True)
class PersistenceBound:
    eps0: float
    asymptotic_error: float
    K_corollary: float


def persistence_bound(C, eps0, alpha, gamma, rho, K_corollary=None):
    """Asymptotic spread ``C * eps0 / (alpha * gamma - rho)`` under perturbations.

    With a symmetric Laplacian and ``gamma = beta * lambda_2`` the same
    expression, with ``K_corollary`` in place of ``C``, bounds the
    limit superior of the average synchronisation error.

    Raises
    ------
    DomainError
        If ``alpha * gamma <= rho``.
    """
    if eps0 < 0:
        raise ValidationError(f"eps0 must be >= 0, got {eps0}")
    mu = alpha * gamma - rho
    if mu <= 0:
        raise DomainError(f"alpha*gamma - rho = {mu:.4g} <= 0: no persistence certificate")
    K = C if K_corollary is None else K_corollary
    return PersistenceBound(eps0=float(eps0), asymptotic_error=C * eps0 / mu, K_corollary=float(K))


def delta_estimate(alpha, gamma, rho, sigma, C, pi_N_norm):
    """Radius ``(alpha gamma - rho) / (4 sigma C ||pi_N||)`` of the attracted ball.

    Valid for linear coupling and a second-derivative bound ``sigma`` on the
    isolated field. ``pi_N_norm`` is commonly estimated by ``kappa_inf(P)``.
    """
    mu = alpha * gamma - rho
    if mu <= 0:
        raise DomainError("no contraction: alpha*gamma <= rho")
    if sigma <= 0 or C <= 0 or pi_N_norm <= 0:
        raise ValidationError("sigma, C and ||pi_N|| must be positive")
    return mu / (4.0 * sigma * C * pi_N_norm)


def jacobian_bound(jacobian, states, t=0.0, p="inf"):
    """Empirical ``varrho = max ||D f(t, x)||`` over sampled states."""
    return max(operator_norm(jacobian(t, np.asarray(x, dtype=float)), p) for x in states)
