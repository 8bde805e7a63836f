"""scikit-learn style wrappers around the analysis and sweep functions.

``SyncAnalyzer`` treats a weight matrix as its input: ``fit`` computes the
certificate, ``predict`` says whether given coupling strengths are certified
to synchronise and ``decision_function`` returns the guaranteed rate.
``CriticalCouplingEstimator`` fits ``alpha_c`` over a grid of coupling
scales and predicts it in between by log-log interpolation.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import ValidationError
from .experiments import beta_sweep
from .network import build_laplacian
from .stability import analyze, compute_gamma, coupling_spec
from .validation import check_weights

__all__ = ["SyncAnalyzer", "CriticalCouplingEstimator"]


def _alphas(alpha):
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    if a.ndim != 1 or not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValidationError("alpha must be a finite non-negative scalar or 1-D array")
    return a


class SyncAnalyzer(BaseEstimator):
    """Synchronisation certificate for a weight matrix.

    Parameters
    ----------
    Gamma : array_like, shape (m, m)
        Linearised coupling.
    varrho : float or None
        Jacobian bound of the isolated dynamics. Without it only ``gamma_``
        is computed.
    c, K : float
        Norm-equivalence and diagonal-dominance constants.
    jordan_eps_ratio : float
    eps_L : float
        Perturbation scale for defective Laplacians.

    Attributes
    ----------
    laplacian_ : LaplacianBundle
    gamma_ : float
    rho_bound_ : float or None
    alpha_threshold_ : float or None
    analysis_ : SyncAnalysis or None
    """

    def __init__(self, Gamma=None, varrho=None, c=1.0, K=1.0, jordan_eps_ratio=0.5, eps_L=1e-2):
        self.Gamma = Gamma
        self.varrho = varrho
        self.c = c
        self.K = K
        self.jordan_eps_ratio = jordan_eps_ratio
        self.eps_L = eps_L

    def fit(self, W, y=None, laplacian_jordan=None):
        if self.Gamma is None:
            raise ValidationError("Gamma must be set before fit")
        W = check_weights(W)
        self.laplacian_ = build_laplacian(W)
        cspec = coupling_spec(self.Gamma)
        self.gamma_ = compute_gamma(self.laplacian_, cspec)
        self.analysis_ = None
        self.rho_bound_ = None
        self.alpha_threshold_ = None
        if self.varrho is not None:
            self.analysis_ = analyze(self.laplacian_, cspec, self.varrho,
                                     jordan_eps_ratio=self.jordan_eps_ratio, c=self.c, K=self.K,
                                     laplacian_jordan=laplacian_jordan, eps_L=self.eps_L)
            self.rho_bound_ = self.analysis_.rho_bound
            self.alpha_threshold_ = self.analysis_.alpha_threshold
        self.n_nodes_ = W.shape[0]
        return self

    def decision_function(self, alpha):
        """Guaranteed rate ``alpha * gamma - rho`` for each coupling strength."""
        check_is_fitted(self, "gamma_")
        if self.analysis_ is None:
            raise ValidationError("varrho was not given; only gamma_ is available")
        return _alphas(alpha) * self.gamma_ - self.rho_bound_

    def predict(self, alpha):
        """True where the certificate guarantees synchronisation."""
        return self.decision_function(alpha) > 0


class CriticalCouplingEstimator(BaseEstimator):
    """Empirical critical coupling as a function of the coupling scale.

    Parameters
    ----------
    template : RunConfig
        Run settings and network; its coupling must be a built-in ``jordan``
        or ``scalar`` coupling, or ``family`` must be given.
    bracket, tol, rel_tol, scan_points, max_doublings :
        Passed to :func:`syncnet.experiments.find_critical_coupling`.
    fit_range : (float, float) or None
        Sub-range of the grid used for ``slope_``.
    family : callable or None
        ``beta -> CouplingFunction``.
    threads : int or None

    Attributes
    ----------
    results_ : list of CriticalCouplingResult
    betas_, alpha_c_, rho_c_ : ndarray
        Grid points with a threshold, and the values found there.
    slope_ : float or None
        Log-log slope of ``rho_c`` against ``beta``.
    """

    def __init__(self, template=None, bracket=(0.0, 10.0), tol=1e-2, rel_tol=0.0, scan_points=0,
                 max_doublings=10, fit_range=None, family=None, threads=None):
        self.template = template
        self.bracket = bracket
        self.tol = tol
        self.rel_tol = rel_tol
        self.scan_points = scan_points
        self.max_doublings = max_doublings
        self.fit_range = fit_range
        self.family = family
        self.threads = threads

    def fit(self, beta_grid, y=None):
        if self.template is None:
            raise ValidationError("template must be set before fit")
        sweep = beta_sweep(self.template, np.ravel(beta_grid), self.bracket, self.tol,
                           rel_tol=self.rel_tol, family=self.family, fit_range=self.fit_range,
                           scan_points=self.scan_points, max_doublings=self.max_doublings,
                           threads=self.threads)
        ok = [r for r in sweep.results if r.alpha_c is not None]
        self.results_ = sweep.results
        self.slope_ = sweep.slope
        self.betas_ = np.array([r.beta for r in ok])
        self.alpha_c_ = np.array([r.alpha_c for r in ok])
        self.rho_c_ = np.array([r.rho_c for r in ok])
        return self

    def predict(self, beta):
        """``alpha_c`` interpolated linearly in ``log beta``/``log alpha_c``.

        Outside the fitted grid the end values are held constant.
        """
        check_is_fitted(self, "results_")
        if self.betas_.size == 0:
            raise ValidationError("no grid point produced a threshold")
        b = np.atleast_1d(np.asarray(beta, dtype=float))
        if np.any(b <= 0):
            raise ValidationError("beta must be positive")
        ok = self.alpha_c_ > 0
        if not ok.any():
            return np.zeros_like(b)
        return np.exp(np.interp(np.log(b), np.log(self.betas_[ok]), np.log(self.alpha_c_[ok])))
