"""Node dynamics, diffusive couplings and fixed-step Runge-Kutta integration.

A network state is an ``(n, m)`` array whose row ``i`` is node ``x_i``. The
right-hand side of node ``i`` is

    f(t, x_i) + g_i(t, x_i) + alpha * sum_j W[i, j] h(x_j - x_i)

with optional perturbations ``g_i``. Built-in fields and couplings carry an
integer code for the compiled integrator in ``_kernels``; anything else runs
through the pure-NumPy reference path.
"""
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .exceptions import DimensionError, ValidationError
from .validation import check_matrix, check_positive, check_state, check_weights

__all__ = [
    "VectorField", "CouplingFunction", "NetworkSystem", "Trajectory", "ButcherTableau",
    "RK4", "RK6", "TABLEAUS", "lorenz", "nonautonomous_linear", "rotating_matrix",
    "linear_field", "linear_decay", "linear_coupling", "tanh_coupling",
    "scalar_coupling", "jordan_coupling", "constant_biases", "network_rhs",
    "integrate", "simulate",
]


@dataclass(frozen=True)
class VectorField:
    """Isolated node dynamics ``x' = f(t, x)``.

    Attributes
    ----------
    dim : int
    eval : callable
        ``eval(t, x)``. With ``vectorized=True`` it must also accept a stack
        of states of shape ``(n, dim)``.
    jacobian : callable or None
        ``jacobian(t, x) -> (dim, dim)``.
    name : str
    vectorized : bool
    kernel : tuple or None
        ``(code, params)`` for the compiled integrator.
    params : dict
        Parameters the field was built from, for reports.
    """

    dim: int
    eval: Callable
    jacobian: Optional[Callable] = None
    name: str = "custom"
    vectorized: bool = False
    kernel: Optional[tuple] = None
    params: dict = dc_field(default_factory=dict)

    def __call__(self, t, x):
        return self.eval(t, x)

    def eval_nodes(self, t, X):
        if self.vectorized:
            return np.asarray(self.eval(t, X), dtype=float)
        return np.stack([np.asarray(self.eval(t, x), dtype=float) for x in X])


@dataclass(frozen=True)
class CouplingFunction:
    """Coupling ``h`` with ``h(0) = 0`` and linearisation ``Gamma = Dh(0)``.

    ``eval`` acts on the last axis, so it accepts any stack of differences.
    """

    dim: int
    eval: Callable
    Gamma: np.ndarray
    linear: bool
    name: str = "custom"
    kernel: Optional[int] = None

    def __call__(self, x):
        return self.eval(x)


def lorenz(sigma=10.0, r=28.0, b=8.0 / 3.0):
    """Lorenz field ``(sigma (v-u), u (r-w) - v, -b w + u v)``."""

    def f(t, x):
        x = np.asarray(x, dtype=float)
        u, v, w = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([sigma * (v - u), u * (r - w) - v, -b * w + u * v], axis=-1)

    def jac(t, x):
        u, v, w = np.asarray(x, dtype=float)
        return np.array([[-sigma, sigma, 0.0], [r - w, -1.0, -u], [v, u, -b]])

    return VectorField(dim=3, eval=f, jacobian=jac, name="lorenz", vectorized=True,
                       kernel=(K.FIELD_LORENZ, np.array([sigma, r, b], dtype=float)),
                       params={"sigma": sigma, "r": r, "b": b})


def rotating_matrix(t, omega=6.0):
    """``A(t) = Rot(-omega t) A0 Rot(omega t)`` with ``A0 = [[-10, 12], [0, -1]]``.

    Its eigenvalues are -1 and -10 for every ``t``.
    """
    c, s = np.cos(omega * t), np.sin(omega * t)
    return np.array([[-1 - 9 * c * c + 12 * s * c, 12 * c * c + 9 * s * c],
                     [-12 * s * s + 9 * s * c, -1 - 9 * s * s - 12 * s * c]])


def nonautonomous_linear(omega=6.0):
    """Planar ``x' = A(t) x`` whose frozen eigenvalues hide an unstable mode.

    Returns
    -------
    field : VectorField
    analytic_solution : callable
        ``analytic_solution(t, x0=(5, 5))``, the exact solution from
        ``x(0) = x0``. In the frame ``y = Rot(omega t) x`` the system is
        ``y' = M y`` with constant ``M`` having eigenvalues 2 and -13 when
        ``omega = 6``, so trajectories grow like ``e^{2t}``.
    """

    def f(t, x):
        x = np.asarray(x, dtype=float)
        return x @ rotating_matrix(t, omega).T

    def jac(t, x):
        return rotating_matrix(t, omega)

    A0 = rotating_matrix(0.0, omega)
    M = A0 + omega * np.array([[0.0, -1.0], [1.0, 0.0]])
    mu, V = np.linalg.eig(M)
    mu, V = mu.real, V.real

    def analytic_solution(t, x0=(5.0, 5.0)):
        coef = np.linalg.solve(V, np.asarray(x0, dtype=float))
        t = np.asarray(t, dtype=float)
        y = (V[None, :, :] * (coef * np.exp(np.multiply.outer(t.ravel(), mu)))[:, None, :]).sum(-1)
        c, s = np.cos(omega * t.ravel()), np.sin(omega * t.ravel())
        x = np.stack([c * y[:, 0] + s * y[:, 1], -s * y[:, 0] + c * y[:, 1]], axis=-1)
        return x.reshape(t.shape + (2,))

    field = VectorField(dim=2, eval=f, jacobian=jac, name="nonautonomous_linear", vectorized=True,
                        kernel=(K.FIELD_ROTATING, np.array([omega])), params={"omega": omega})
    return field, analytic_solution


def linear_field(A, name="linear"):
    """Autonomous linear field ``x' = A x``."""
    A = check_matrix(A, "A", square=True)

    def f(t, x):
        return np.asarray(x, dtype=float) @ A.T

    return VectorField(dim=A.shape[0], eval=f, jacobian=lambda t, x: A.copy(), name=name,
                       vectorized=True, kernel=(K.FIELD_LINEAR, A.ravel().copy()),
                       params={"A": A.tolist()})


def linear_decay(eps=0.1, dim=1):
    """``x' = -eps x``: a globally attracting fixed point at the origin."""
    field = linear_field(-float(eps) * np.eye(dim), name="linear_decay")
    return replace(field, params={"eps": float(eps), "dim": dim})


def linear_coupling(Gamma, name="linear"):
    """``h(x) = Gamma x``."""
    G = check_matrix(Gamma, "Gamma", square=True)
    return CouplingFunction(dim=G.shape[0], eval=lambda x: np.asarray(x, dtype=float) @ G.T,
                            Gamma=G, linear=True, name=name, kernel=K.COUPLING_LINEAR)


def tanh_coupling(Gamma):
    """``h(x) = Gamma tanh(x)`` (componentwise tanh); ``Dh(0) = Gamma``."""
    G = check_matrix(Gamma, "Gamma", square=True)
    return CouplingFunction(dim=G.shape[0], eval=lambda x: np.tanh(np.asarray(x, dtype=float)) @ G.T,
                            Gamma=G, linear=False, name="tanh", kernel=K.COUPLING_TANH)


def scalar_coupling(beta, m):
    return linear_coupling(beta * np.eye(m), name="scalar")


def jordan_coupling(beta, m=2):
    """``Gamma = beta I + N`` with ``N`` the nilpotent shift: one Jordan block."""
    return linear_coupling(beta * np.eye(m) + np.eye(m, k=1), name="jordan")


@dataclass(frozen=True)
class NetworkSystem:
    """Diffusively coupled network of identical nodes.

    Attributes
    ----------
    field : VectorField
    coupling : CouplingFunction
    weights : ndarray, shape (n, n)
    alpha : float
        Overall coupling strength, ``>= 0``.
    perturbations : sequence of callables or None
        ``g_i(t, x_i)``, one per node.
    bias : ndarray, shape (n, m) or None
        Constant perturbations ``g_i = bias[i]``; kept separate so the
        compiled integrator can use them.
    eps0 : float or None
        Declared bound ``sup ||g_i||``.
    """

    field: VectorField
    coupling: CouplingFunction
    weights: np.ndarray
    alpha: float = 0.0
    perturbations: Optional[Sequence[Callable]] = None
    bias: Optional[np.ndarray] = None
    eps0: Optional[float] = None

    def __post_init__(self):
        W = check_weights(self.weights)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "alpha", check_positive(self.alpha, "alpha", strict=False))
        if self.field.dim != self.coupling.dim:
            raise DimensionError(f"field has dimension {self.field.dim} but coupling has "
                                 f"dimension {self.coupling.dim}")
        n = W.shape[0]
        if self.perturbations is not None and len(self.perturbations) != n:
            raise DimensionError(f"{len(self.perturbations)} perturbations for {n} nodes")
        if self.bias is not None:
            object.__setattr__(self, "bias", check_state(self.bias, n, self.m, "bias").copy())
        if self.eps0 is not None:
            object.__setattr__(self, "eps0", check_positive(self.eps0, "eps0", strict=False))

    @property
    def n(self):
        return self.weights.shape[0]

    @property
    def m(self):
        return self.field.dim

    @property
    def compiled(self):
        """True when the compiled integrator can run this system."""
        return (self.field.kernel is not None and self.coupling.kernel is not None
                and self.perturbations is None)

    def with_alpha(self, alpha):
        return replace(self, alpha=alpha)

    def isolated(self):
        """The single uncoupled node."""
        return NetworkSystem(self.field, self.coupling, np.zeros((1, 1)))


def constant_biases(n, m, eps0, seed=0):
    """Random constant perturbations with ``||g_i|| = eps0`` exactly."""
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, m))
    return eps0 * B / np.linalg.norm(B, axis=1, keepdims=True)


def network_rhs(system, t, X):
    """Right-hand side of the coupled network.

    Parameters
    ----------
    system : NetworkSystem
    t : float
    X : array_like, shape (n, m) or (n*m,)

    Returns
    -------
    ndarray with the shape of ``X``.

    Notes
    -----
    The coupling sum runs over ``j`` left to right, and each term is built
    from the difference ``x_j - x_i``; on the diagonal every difference is
    exactly zero, so synchronous states feel no coupling at all.
    """
    flat = np.ndim(X) == 1
    X = check_state(X, system.n, system.m)
    out = system.field.eval_nodes(t, X)
    if system.bias is not None:
        out = out + system.bias
    if system.perturbations is not None:
        out = out + np.stack([np.asarray(g(t, x), dtype=float) for g, x in zip(system.perturbations, X)])
    if system.alpha != 0 and system.n > 1:
        H = system.coupling.eval(X[None, :, :] - X[:, None, :])
        W = system.weights
        acc = np.zeros_like(out)
        for j in range(system.n):
            acc += W[:, j, None] * H[:, j]
        out = out + system.alpha * acc
    return out.ravel() if flat else out


@dataclass(frozen=True)
class ButcherTableau:
    name: str
    order: int
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray


RK4 = ButcherTableau(
    "rk4", 4,
    A=np.array([[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]], dtype=float),
    b=np.array([1 / 6, 1 / 3, 1 / 3, 1 / 6]),
    c=np.array([0, 0.5, 0.5, 1.0]),
)

# Seven-stage explicit sixth-order method.
_A6 = np.zeros((7, 7))
_A6[1, 0] = 1 / 3
_A6[2, 1] = 2 / 3
_A6[3, :3] = [1 / 12, 1 / 3, -1 / 12]
_A6[4, :4] = [-1 / 16, 9 / 8, -3 / 16, -3 / 8]
_A6[5, :5] = [0, 9 / 8, -3 / 8, -3 / 4, 1 / 2]
_A6[6, :6] = [9 / 44, -9 / 11, 63 / 44, 18 / 11, 0, -16 / 11]
RK6 = ButcherTableau(
    "rk6", 6, A=_A6,
    b=np.array([11 / 120, 0, 27 / 40, 27 / 40, -4 / 15, -4 / 15, 11 / 120]),
    c=np.array([0, 1 / 3, 2 / 3, 1 / 3, 1 / 2, 1 / 2, 1]),
)

TABLEAUS = {"rk4": RK4, "rk6": RK6}


def _tableau(method):
    if isinstance(method, ButcherTableau):
        return method
    try:
        return TABLEAUS[method]
    except KeyError:
        raise ValidationError(f"unknown method {method!r}; choose from {sorted(TABLEAUS)}") from None


@dataclass
class Trajectory:
    """Stored solution on the uniform grid ``t0 + k * dt * record_every``.

    ``states`` has shape ``(len(times),) + X0.shape``. When ``diverged`` is
    set the run stopped early and ``t_diverged`` is the last valid time.
    """

    times: np.ndarray
    states: np.ndarray
    dt: float
    method: str
    diverged: bool = False
    t_diverged: Optional[float] = None

    @property
    def final(self):
        return self.states[-1]


def _node_norm(X):
    X = np.asarray(X)
    rows = X.reshape(1, -1) if X.ndim <= 1 else X.reshape(X.shape[0], -1)
    return np.sqrt((rows * rows).sum(axis=1)).max()


def _steps(t0, t1, dt):
    check_positive(dt, "dt")
    if not (np.isfinite(t0) and np.isfinite(t1)) or t1 <= t0:
        raise ValidationError(f"need t1 > t0, got t0={t0}, t1={t1}")
    return int(np.ceil((t1 - t0) / dt - 1e-9))


def integrate(rhs, X0, t0, t1, dt, method="rk6", divergence_guard=1e6, record_every=1):
    """Fixed-step explicit Runge-Kutta integration of ``X' = rhs(t, X)``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, X)`` returning an array shaped like ``X``.
    X0 : array_like
    t0, t1 : float
        The run takes ``ceil((t1 - t0) / dt)`` steps of exactly ``dt``.
    dt : float
    method : {'rk4', 'rk6'} or ButcherTableau
    divergence_guard : float
        Abort when the max-over-nodes Euclidean norm exceeds this value or
        stops being finite.
    record_every : int

    Returns
    -------
    Trajectory
    """
    return _integrate_steps(rhs, X0, t0, _steps(t0, t1, dt), dt, _tableau(method),
                            divergence_guard, max(int(record_every), 1))


def _integrate_steps(rhs, X0, t0, nsteps, dt, tab, divergence_guard, record_every):
    Y = np.array(X0, dtype=float)
    s = len(tab.b)
    rec = [Y.copy()]
    diverged = False
    done = nsteps
    k_stages = [None] * s
    for k in range(nsteps):
        t = t0 + k * dt
        for st in range(s):
            Ys = Y
            for j in range(st):
                if tab.A[st, j] != 0:
                    Ys = Ys + (dt * tab.A[st, j]) * k_stages[j]
            k_stages[st] = np.asarray(rhs(t + tab.c[st] * dt, Ys), dtype=float)
        incr = np.zeros_like(Y)
        for st in range(s):
            if tab.b[st] != 0:
                incr += tab.b[st] * k_stages[st]
        Ynew = Y + dt * incr
        if not _node_norm(Ynew) <= divergence_guard:
            diverged, done = True, k
            break
        Y = Ynew
        if (k + 1) % record_every == 0:
            rec.append(Y.copy())
    return _trajectory(np.array(rec), t0, dt, record_every, tab.name, diverged, done)


def _trajectory(states, t0, dt, record_every, name, diverged, done):
    times = t0 + dt * record_every * np.arange(len(states))
    return Trajectory(times=times, states=states, dt=dt, method=name, diverged=diverged,
                      t_diverged=t0 + done * dt if diverged else None)


def simulate(system, X0, t0, t1, dt, method="rk6", divergence_guard=1e6, record_every=1,
             compiled=None):
    """Integrate a ``NetworkSystem`` from ``X0`` (shape ``(n, m)``).

    The compiled kernel is used whenever ``system.compiled`` holds, unless
    ``compiled=False``; results agree with the reference path to rounding.
    """
    return _run(system, X0, t0, _steps(t0, t1, dt), dt, method, divergence_guard,
                record_every, compiled)


def _run(system, X0, t0, nsteps, dt, method="rk6", divergence_guard=1e6, record_every=1,
         compiled=None):
    X0 = check_state(X0, system.n, system.m, "X0").copy()
    use = system.compiled if compiled is None else (compiled and system.compiled)
    tab = _tableau(method)
    record_every = max(int(record_every), 1)
    if not use:
        return _integrate_steps(lambda t, X: network_rhs(system, t, X), X0, t0, nsteps, dt,
                                tab, divergence_guard, record_every)
    code, fp = system.field.kernel
    bias = system.bias if system.bias is not None else np.zeros((system.n, system.m))
    rec, n_rec, done, diverged = K.integrate_kernel(
        code, np.ascontiguousarray(fp, dtype=float), system.coupling.kernel,
        np.ascontiguousarray(system.coupling.Gamma), system.weights, float(system.alpha),
        bias, X0, float(t0), float(dt), int(nsteps), tab.A, tab.b, tab.c,
        float(divergence_guard), record_every)
    return _trajectory(rec[:n_rec].copy(), t0, dt, record_every, tab.name, bool(diverged), done)
