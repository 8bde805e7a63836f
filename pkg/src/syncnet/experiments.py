"""Numerical experiments on coupled networks.

Synchronisation detection and decay-rate fits for single runs, bisection for
the critical coupling, sweeps over the coupling scale ``beta`` and
persistence measurements under constant perturbations.
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Optional

import numpy as np

from ._config import TOL
from . import dynamics
from .dynamics import NetworkSystem, _run
from .linalg import operator_norm
from .exceptions import DomainError, NoThresholdError, SyncnetError, ValidationError
from .validation import check_positive, check_state

__all__ = [
    "RunConfig", "DecayFit", "SyncRunResult", "CriticalCouplingResult", "SweepResult",
    "PersistenceResult", "pairwise_spread", "sync_error", "estimate_decay_rate",
    "initial_state", "classify_run", "find_critical_coupling", "beta_sweep",
    "persistence_experiment", "sweep_threads", "empirical_varrho", "burn_in",
]

_LINEAR_FIELDS = ("linear", "linear_decay", "nonautonomous_linear")
MIN_FIT_SPAN = 5.0


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    Attributes
    ----------
    system : NetworkSystem
    t0, t_burn, t_end : float
        The isolated node is integrated over ``[t0, t_burn]``; the network
        then runs over ``[t_burn, t_end]``.
    dt : float
    method : str
    delta : float
        Radius of the ball the initial node states are drawn from.
    seed : int
    stream : int or None
        Sub-stream index, e.g. the grid index of a sweep point.
    sync_tol : float
        Required final-to-initial spread ratio.
    rate_min : float
        Required contraction rate.
    rate_fit_window : tuple or None
        Absolute time window for the decay fit. By default the second half
        of the simulated interval (cut where the spread underflows), widened
        to ``MIN_FIT_SPAN`` time units when possible.
    ic_mode : {'auto', 'ball', 'antipodal'}
        ``ball``: ``x_i = s0 + delta u_i`` with seeded unit-ball samples.
        ``antipodal`` (two nodes only): ``x_1 = s0 + delta u``,
        ``x_2 = s0 - delta u``. ``auto`` picks ``antipodal`` for two-node
        linear systems, where it keeps the mean mode exactly at ``s0``.
    x_init : array_like or None
        Start of the burn-in. Defaults to the origin for linear fields and
        to ``(1, ..., 1)`` otherwise.
    divergence_guard : float
    sample_dt : float
        Spacing of the recorded spread series.
    early_stop : bool
        Stop once the outcome is settled (see :func:`classify_run`).
    desync_factor : float or None
        Early-stop growth factor for unsynchronised runs. ``None`` means
        ``1e4`` for nonlinear fields and no early stop for linear ones,
        which grow without bound until the guard trips.
    """

    system: NetworkSystem
    t0: float = 0.0
    t_burn: float = 0.0
    t_end: float = 50.0
    dt: float = 1e-3
    method: str = "rk6"
    delta: float = 1e-3
    seed: int = 0
    stream: Optional[int] = None
    sync_tol: float = 1e-6
    rate_min: float = 0.05
    rate_fit_window: Optional[tuple] = None
    ic_mode: str = "auto"
    x_init: Optional[tuple] = None
    divergence_guard: float = 1e6
    sample_dt: float = 1e-2
    early_stop: bool = True
    desync_factor: Optional[float] = None

    def __post_init__(self):
        if not (self.t0 <= self.t_burn < self.t_end):
            raise ValidationError(f"need t0 <= t_burn < t_end, got {self.t0}, {self.t_burn}, {self.t_end}")
        for name in ("dt", "delta", "sync_tol", "sample_dt", "divergence_guard"):
            check_positive(getattr(self, name), name)
        if self.desync_factor is not None:
            check_positive(self.desync_factor, "desync_factor")
        check_positive(self.rate_min, "rate_min", strict=False)
        if self.ic_mode not in ("auto", "ball", "antipodal"):
            raise ValidationError(f"ic_mode must be auto, ball or antipodal, got {self.ic_mode!r}")
        if self.ic_mode == "antipodal" and self.system.n != 2:
            raise ValidationError("antipodal initial conditions need exactly two nodes")
        if self.method not in dynamics.TABLEAUS:
            raise ValidationError(f"unknown method {self.method!r}")
        if self.rate_fit_window is not None:
            a, b = self.rate_fit_window
            if not a < b:
                raise ValidationError(f"rate_fit_window must be increasing, got {self.rate_fit_window}")

    def with_alpha(self, alpha):
        return replace(self, system=self.system.with_alpha(alpha))

    @property
    def linear(self):
        return self.system.field.name in _LINEAR_FIELDS

    @property
    def effective_desync_factor(self):
        if self.desync_factor is not None:
            return self.desync_factor
        return math.inf if self.linear else 1e4

    @property
    def record_every(self):
        return max(int(round(self.sample_dt / self.dt)), 1)


def pairwise_spread(X):
    """Largest Euclidean distance between two node states."""
    X = np.asarray(X, dtype=float)
    X = X.reshape(X.shape[0], -1)
    if X.shape[0] < 2:
        return 0.0
    D = X[:, None, :] - X[None, :, :]
    return float(np.sqrt((D * D).sum(-1)).max())


def sync_error(X):
    """Average distance over ordered pairs ``i != j``.

    Raises
    ------
    DomainError
        For fewer than two nodes.
    """
    X = np.asarray(X, dtype=float)
    X = X.reshape(X.shape[0], -1)
    n = X.shape[0]
    if n < 2:
        raise DomainError("sync_error needs at least two nodes")
    D = X[:, None, :] - X[None, :, :]
    return float(np.sqrt((D * D).sum(-1)).sum() / (n * (n - 1)))


def _series(states, fn):
    return np.array([fn(X) for X in states])


@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of ``log(spread)`` against time.

    ``floored`` means fewer than ten points of the window were above the
    underflow floor, so the fit used what was available. ``exact`` means the
    spread was exactly zero throughout (rate ``-inf``).
    """

    rate: float
    n_points: int
    floored: bool = False
    exact: bool = False


def estimate_decay_rate(times, spread, fit_window=None, floor=TOL.underflow_floor):
    """Exponential rate of a spread series.

    Parameters
    ----------
    times, spread : array_like
    fit_window : (float, float) or None
        Closed time window; default is the whole series.
    floor : float
        Values at or below this are treated as underflowed and excluded.

    Returns
    -------
    DecayFit
    """
    t = np.asarray(times, dtype=float)
    s = np.asarray(spread, dtype=float)
    if t.shape != s.shape or t.ndim != 1:
        raise ValidationError("times and spread must be 1-D arrays of equal length")
    if fit_window is not None:
        sel = (t >= fit_window[0]) & (t <= fit_window[1])
        t, s = t[sel], s[sel]
    if t.size == 0:
        raise ValidationError("no samples in the fit window")
    if np.all(s == 0):
        return DecayFit(rate=-math.inf, n_points=0, exact=True)
    ok = s > floor
    floored = int(ok.sum()) < 10
    if floored:
        # use the stretch before the first underflow
        first_bad = int(np.argmin(ok)) if not ok.all() else ok.size
        ok = np.zeros_like(ok)
        ok[:first_bad] = True
    tt, ls = t[ok], np.log(s[ok])
    if tt.size < 2:
        return DecayFit(rate=math.nan, n_points=int(tt.size), floored=True)
    slope = np.polyfit(tt, ls, 1)[0]
    return DecayFit(rate=float(slope), n_points=int(tt.size), floored=floored)


@dataclass
class SyncRunResult:
    """Outcome of :func:`classify_run`."""

    times: np.ndarray
    spread_series: np.ndarray
    decay_rate: float
    synchronised: bool
    diverged: bool
    initial_spread: float
    final_spread: float
    fit: DecayFit
    stop_reason: str
    t_stop: float

    def summary(self):
        return {"decay_rate": _json_float(self.decay_rate), "synchronised": self.synchronised,
                "diverged": self.diverged, "initial_spread": self.initial_spread,
                "final_spread": self.final_spread, "stop_reason": self.stop_reason,
                "t_stop": self.t_stop, "fit_points": self.fit.n_points,
                "fit_floored": self.fit.floored}


def _json_float(x):
    return x if x is None or math.isfinite(x) else str(x)


def _rng(config):
    key = [config.seed] if config.stream is None else [config.seed, config.stream]
    return np.random.default_rng(key)


def _unit_ball(rng, n, m):
    U = rng.standard_normal((n, m))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    return U * rng.random((n, 1)) ** (1.0 / m)


def burn_in(config):
    """End state of the isolated node after ``[t0, t_burn]``, shape ``(1, m)``.

    Returns
    -------
    s0 : ndarray
    diverged : bool
    """
    system = config.system
    m = system.m
    if config.x_init is not None:
        s0 = check_state(config.x_init, 1, m, "x_init")
    else:
        s0 = np.zeros((1, m)) if config.linear else np.ones((1, m))
    if config.t_burn > config.t0:
        steps = dynamics._steps(config.t0, config.t_burn, config.dt)
        tr = _run(system.isolated(), s0, config.t0, steps, config.dt, config.method,
                  config.divergence_guard, record_every=steps)
        return tr.final, tr.diverged
    return s0, False


def initial_state(config):
    """Burn in the isolated node, then scatter the nodes around it.

    Returns
    -------
    X0 : ndarray, shape (n, m)
    burn_diverged : bool
    """
    n, m = config.system.n, config.system.m
    s0, burn_diverged = burn_in(config)
    rng = _rng(config)
    mode = config.ic_mode
    if mode == "auto":
        mode = "antipodal" if (n == 2 and config.linear) else "ball"
    if mode == "antipodal":
        u = _unit_ball(rng, 1, m)[0]
        X0 = np.stack([s0[0] + config.delta * u, s0[0] - config.delta * u])
    else:
        X0 = s0 + config.delta * _unit_ball(rng, n, m)
    return X0, burn_diverged


def classify_run(config, chunk=1.0):
    """Integrate one network run and decide whether it synchronises.

    The run is synchronised when the fitted decay rate of the pairwise
    spread is below ``-rate_min`` and the final spread is below
    ``sync_tol`` times the initial spread; it diverged when the norm guard
    tripped. With ``early_stop`` the integration proceeds in chunks of about
    ``chunk`` time units and stops once the spread has stayed a further factor 100
    below the synchronisation level, or above the desync factor times its
    initial value, for a whole chunk.
    """
    X0, burn_div = initial_state(config)
    s_init = pairwise_spread(X0)
    times, spread = [config.t_burn], [s_init]
    system = config.system
    dt = config.dt
    rec = config.record_every
    total = dynamics._steps(config.t_burn, config.t_end, dt)
    per_chunk = rec * max(int(round(chunk / (dt * rec))), 1) if config.early_stop else total
    done = 0
    X = X0
    diverged = burn_div
    reason = "diverged" if burn_div else "t_end"
    stop_low = 1e-2 * config.sync_tol * s_init
    stop_high = config.effective_desync_factor * s_init
    while done < total and not diverged:
        steps = min(per_chunk, total - done)
        tr = _run(system, X, config.t_burn + done * dt, steps, dt, config.method,
                  config.divergence_guard, rec)
        sp = _series(tr.states[1:], pairwise_spread)
        times.extend(tr.times[1:])
        spread.extend(sp)
        X = tr.final
        if tr.diverged:
            diverged, reason = True, "diverged"
            break
        done += steps
        if config.early_stop and sp.size:
            # whole-chunk tests: the spread of non-normal systems oscillates
            if sp.max() <= stop_low:
                reason = "converged"
                break
            if sp.min() >= stop_high:
                reason = "desynchronised"
                break
    times = np.asarray(times)
    spread = np.asarray(spread)
    t_stop = float(times[-1])
    window = config.rate_fit_window
    if window is None:
        # second half of the stretch before the spread underflows, but at
        # least MIN_FIT_SPAN long so oscillating spreads average out
        low = np.flatnonzero(spread <= TOL.underflow_floor)
        t_fit = float(times[low[0]]) if low.size and low[0] > 0 else t_stop
        start = min(config.t_burn + 0.5 * (t_fit - config.t_burn),
                    max(t_fit - MIN_FIT_SPAN, config.t_burn))
        window = (start, t_fit)
    fit = estimate_decay_rate(times, spread, window) if times.size > 1 else DecayFit(math.nan, 0, True)
    final = float(spread[-1])
    if diverged:
        synced = False
    elif fit.exact or s_init == 0:
        synced = True
    else:
        synced = bool(fit.rate < -config.rate_min and final < config.sync_tol * s_init)
    return SyncRunResult(times=times, spread_series=spread, decay_rate=fit.rate,
                         synchronised=synced, diverged=diverged, initial_spread=s_init,
                         final_spread=final, fit=fit, stop_reason=reason, t_stop=t_stop)


@dataclass
class CriticalCouplingResult:
    """Bisection outcome for one coupling scale.

    ``alpha_c`` is ``None`` when no threshold could be bracketed; ``error``
    then says why.
    """

    beta: Optional[float]
    alpha_c: Optional[float]
    rho_c: Optional[float]
    bisection_width: Optional[float]
    evaluations: int
    bracket: Optional[tuple] = None
    rho_c_gamma: Optional[float] = None
    tol: Optional[float] = None
    flags: dict = dc_field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self):
        return {"beta": self.beta, "alpha_c": self.alpha_c, "rho_c": self.rho_c,
                "rho_c_gamma": self.rho_c_gamma, "bisection_width": self.bisection_width,
                "evaluations": self.evaluations,
                "bracket": None if self.bracket is None else list(self.bracket),
                "tol": self.tol, "flags": dict(self.flags), "error": self.error}


def find_critical_coupling(config, bracket=(0.0, 10.0), tol=1e-2, *, rel_tol=0.0, beta=None,
                           gamma=None, max_doublings=10, scan_points=0, spot_check=True):
    """Smallest coupling above which the network synchronises.

    The predicate is :func:`classify_run`. If ``hi`` does not synchronise it
    is doubled up to ``max_doublings`` times. With ``scan_points > 0`` a
    geometric scan from ``hi`` downwards first locates the highest
    non-synchronising coupling, so a low-coupling window of synchrony does
    not capture the bisection. Bisection then stops at width
    ``<= max(tol, rel_tol * alpha)``.

    Raises
    ------
    NoThresholdError
        If no synchronising coupling is found below the doubling cap.
    """
    lo, hi = (float(v) for v in bracket)
    if not (0 <= lo < hi):
        raise ValidationError(f"bracket must satisfy 0 <= lo < hi, got {bracket}")
    check_positive(tol, "tol")
    evals = 0
    flags = {}

    def synced(a):
        nonlocal evals
        evals += 1
        return classify_run(config.with_alpha(a)).synchronised

    doublings = 0
    lo_checked = False
    while not synced(hi):
        if doublings >= max_doublings:
            raise NoThresholdError(f"no synchronisation up to alpha = {hi:g} "
                                   f"after {evals} evaluations")
        lo, hi, lo_checked = hi, 2 * hi, True
        doublings += 1
    flags["hi_doublings"] = doublings

    def done(a, b):
        return b - a <= max(tol, rel_tol * b)

    if scan_points > 0 and not lo_checked and not done(lo, hi):
        top = hi
        for a in np.geomspace(hi, max(lo, hi * 1e-3), scan_points + 1)[1:]:
            if not synced(a):
                lo, lo_checked = float(a), True
                break
            top = float(a)
        hi = top
    if not lo_checked and synced(lo):
        flags["lo_edge"] = True
        return _ccr(beta, gamma, lo, 0.0, evals, (lo, lo), tol, flags)

    while not done(lo, hi):
        mid = 0.5 * (lo + hi)
        if synced(mid):
            hi = mid
        else:
            lo = mid
    alpha_c = 0.5 * (lo + hi)
    if spot_check:
        flags["spot_check_2x"] = synced(2 * alpha_c)
    return _ccr(beta, gamma, alpha_c, hi - lo, evals, (lo, hi), max(tol, rel_tol * hi), flags)


def _ccr(beta, gamma, alpha_c, width, evals, bracket, tol, flags):
    return CriticalCouplingResult(
        beta=None if beta is None else float(beta), alpha_c=float(alpha_c),
        rho_c=None if beta is None else float(alpha_c * beta),
        rho_c_gamma=None if gamma is None else float(alpha_c * gamma),
        bisection_width=float(width), evaluations=evals, bracket=tuple(map(float, bracket)),
        tol=float(tol), flags=flags)


@dataclass
class SweepResult:
    """Critical couplings over a ``beta`` grid and their log-log slope.

    ``slope`` is ``None`` when fewer than two grid points inside
    ``fit_range`` produced a threshold.
    """

    results: list
    slope: Optional[float]
    fit_range: Optional[tuple]
    fit_points: int

    @property
    def slope_defined(self):
        return self.slope is not None

    def to_dict(self):
        return {"slope": self.slope, "slope_defined": self.slope_defined,
                "fit_range": None if self.fit_range is None else list(self.fit_range),
                "fit_points": self.fit_points, "table": [r.to_dict() for r in self.results]}


def sweep_threads():
    """Worker count for sweeps: ``SYNCNET_THREADS`` or the number of cores."""
    env = os.environ.get("SYNCNET_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise ValidationError(f"SYNCNET_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def coupling_family(template):
    """``beta -> CouplingFunction`` for the built-in ``jordan`` and ``scalar`` couplings."""
    name, m = template.coupling.name, template.coupling.dim
    if name == "jordan":
        return lambda b: dynamics.jordan_coupling(b, m)
    if name == "scalar":
        return lambda b: dynamics.scalar_coupling(b, m)
    raise ValidationError(f"cannot infer how coupling {name!r} depends on beta; pass family")


def beta_sweep(template, beta_grid, bracket=(0.0, 10.0), tol=1e-2, *, rel_tol=0.0,
               family: Optional[Callable] = None, gamma_fn=None, fit_range=None,
               scan_points=0, max_doublings=10, threads=None):
    """Critical coupling for every ``beta`` and the slope of ``log rho_c`` vs ``log beta``.

    Parameters
    ----------
    template : RunConfig
        Its ``seed`` is the base seed; point ``k`` uses sub-stream ``k``.
    beta_grid : sequence of float
        Positive, increasing.
    family : callable, optional
        ``beta -> CouplingFunction``. Inferred for the built-in ``jordan``
        and ``scalar`` couplings.
    gamma_fn : callable, optional
        ``beta -> gamma``, to report ``alpha_c * gamma`` as well.
    fit_range : (float, float), optional
        Only grid points inside this closed range enter the slope.
    threads : int, optional
        Defaults to :func:`sweep_threads`. Results are returned in grid order.
    """
    grid = [float(b) for b in beta_grid]
    if not grid or any(b <= 0 for b in grid) or any(b2 <= b1 for b1, b2 in zip(grid, grid[1:])):
        raise ValidationError("beta_grid must be non-empty, positive and increasing")
    family = family or coupling_family(template.system)

    def job(k):
        beta = grid[k]
        system = replace(template.system, coupling=family(beta))
        cfg = replace(template, system=system, stream=k)
        gamma = None if gamma_fn is None else gamma_fn(beta)
        try:
            return find_critical_coupling(cfg, bracket, tol, rel_tol=rel_tol, beta=beta,
                                          gamma=gamma, scan_points=scan_points,
                                          max_doublings=max_doublings)
        except SyncnetError as exc:
            return CriticalCouplingResult(beta=beta, alpha_c=None, rho_c=None,
                                          bisection_width=None, evaluations=0,
                                          error=f"{type(exc).__name__}: {exc}")

    workers = min(threads or sweep_threads(), len(grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(len(grid))))
    else:
        results = [job(k) for k in range(len(grid))]

    pts = [(r.beta, r.rho_c) for r in results if r.rho_c is not None and r.rho_c > 0
           and (fit_range is None or fit_range[0] <= r.beta <= fit_range[1])]
    slope = None
    if len(pts) >= 2:
        b, rho = np.log(np.array(pts)).T
        slope = float(np.polyfit(b, rho, 1)[0])
    return SweepResult(results=results, slope=slope,
                       fit_range=None if fit_range is None else tuple(fit_range),
                       fit_points=len(pts))


@dataclass
class PersistenceResult:
    """Average synchronisation error of a perturbed run.

    ``limsup_estimate`` is the maximum of ``e_s`` over the tail window;
    ``ratio`` is ``limsup_estimate / bound.asymptotic_error`` when a bound
    is supplied.
    """

    times: np.ndarray
    es_series: np.ndarray
    limsup_estimate: float
    bound: Optional[object]
    ratio: Optional[float]
    diverged: bool
    tail_start: float

    def summary(self):
        return {"limsup_estimate": self.limsup_estimate, "ratio": self.ratio,
                "diverged": self.diverged, "tail_start": self.tail_start,
                "bound": None if self.bound is None else vars(self.bound).copy()}


def persistence_experiment(config, tail_fraction=0.5, bound=None):
    """Integrate a perturbed network and measure ``limsup e_s``.

    Parameters
    ----------
    config : RunConfig
        ``config.system`` carries constant biases or perturbation functions
        with a declared ``eps0``.
    tail_fraction : float
        Fraction of ``[t_burn, t_end]`` at the end over which ``e_s`` is
        maximised.
    bound : PersistenceBound, optional
        Theoretical bound to compare against.
    """
    system = config.system
    if not 0 < tail_fraction <= 1:
        raise ValidationError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    if system.n < 2:
        raise DomainError("persistence needs at least two nodes")
    perturbed = system.bias is not None or system.perturbations is not None
    if perturbed and system.eps0 is None:
        raise ValidationError("perturbed system must declare eps0")
    X0, burn_div = initial_state(config)
    steps = dynamics._steps(config.t_burn, config.t_end, config.dt)
    tr = _run(system, X0, config.t_burn, steps, config.dt, config.method,
              config.divergence_guard, config.record_every)
    es = _series(tr.states, sync_error)
    tail_start = config.t_end - tail_fraction * (config.t_end - config.t_burn)
    tail = es[tr.times >= tail_start - 1e-12]
    limsup = float(tail.max()) if tail.size else float(es[-1])
    ratio = None
    if bound is not None and bound.asymptotic_error > 0:
        ratio = limsup / bound.asymptotic_error
    return PersistenceResult(times=tr.times, es_series=es, limsup_estimate=limsup, bound=bound,
                             ratio=ratio, diverged=bool(tr.diverged or burn_div),
                             tail_start=float(tail_start))


def empirical_varrho(config, samples=500, p="inf"):
    """``max ||Df(t, x)||`` along the isolated trajectory after the burn-in.

    The isolated node is started at the burn-in end state and integrated over
    ``[t_burn, t_end]``; the Jacobian is evaluated at up to ``samples``
    equally spaced stored states.
    """
    field = config.system.field
    if field.jacobian is None:
        raise ValidationError(f"field {field.name!r} has no Jacobian")
    s0, _ = burn_in(config)
    steps = dynamics._steps(config.t_burn, config.t_end, config.dt)
    every = max(steps // samples, 1)
    tr = _run(config.system.isolated(), s0, config.t_burn, steps, config.dt, config.method,
              config.divergence_guard, every)
    return max(operator_norm(field.jacobian(t, x[0]), p) for t, x in zip(tr.times, tr.states))
