"""Compiled fixed-step Runge-Kutta integration of built-in networks.

Only the built-in vector fields and couplings have compiled counterparts;
they are selected by integer code so that the compiled module can be cached
on disk. ``dynamics.network_rhs`` is the reference implementation and the
test-suite checks that both agree.
"""
import numba as nb
import numpy as np

FIELD_LORENZ = 0
FIELD_LINEAR = 1
FIELD_ROTATING = 2

COUPLING_LINEAR = 0
COUPLING_TANH = 1


@nb.njit(cache=True, nogil=True, inline="always")
def _field(kind, t, x, p, out):
    m = x.shape[0]
    if kind == FIELD_LORENZ:
        out[0] = p[0] * (x[1] - x[0])
        out[1] = x[0] * (p[1] - x[2]) - x[1]
        out[2] = -p[2] * x[2] + x[0] * x[1]
    elif kind == FIELD_LINEAR:
        for a in range(m):
            s = 0.0
            for b in range(m):
                s += p[a * m + b] * x[b]
            out[a] = s
    else:
        c = np.cos(p[0] * t)
        s = np.sin(p[0] * t)
        a11 = -1.0 - 9.0 * c * c + 12.0 * s * c
        a12 = 12.0 * c * c + 9.0 * s * c
        a21 = -12.0 * s * s + 9.0 * s * c
        a22 = -1.0 - 9.0 * s * s - 12.0 * s * c
        out[0] = a11 * x[0] + a12 * x[1]
        out[1] = a21 * x[0] + a22 * x[1]


@nb.njit(cache=True, nogil=True)
def network_rhs_kernel(fkind, fp, ckind, G, W, alpha, bias, t, X, out, d, acc):
    n, m = X.shape
    for i in range(n):
        _field(fkind, t, X[i], fp, out[i])
        for a in range(m):
            out[i, a] += bias[i, a]
            acc[a] = 0.0
        for j in range(n):
            w = W[i, j]
            if w != 0.0:
                for a in range(m):
                    d[a] = X[j, a] - X[i, a]
                    if ckind == COUPLING_TANH:
                        d[a] = np.tanh(d[a])
                for a in range(m):
                    s = 0.0
                    for b in range(m):
                        s += G[a, b] * d[b]
                    acc[a] += w * s
        for a in range(m):
            out[i, a] += alpha * acc[a]


@nb.njit(cache=True, nogil=True)
def _max_node_norm(Y):
    n, m = Y.shape
    best = 0.0
    for i in range(n):
        s = 0.0
        for a in range(m):
            s += Y[i, a] * Y[i, a]
        if not s <= best * best:  # also catches NaN
            best = np.sqrt(s)
    return best


@nb.njit(cache=True, nogil=True)
def integrate_kernel(fkind, fp, ckind, G, W, alpha, bias, X0, t0, dt, nsteps,
                     A, b, c, guard, record_every):
    """Integrate ``nsteps`` RK steps; record every ``record_every``-th state.

    Returns ``(records, n_records, steps_done, diverged)``. ``records[0]`` is
    the initial state. On divergence the offending state is not recorded.
    """
    n, m = X0.shape
    s = b.shape[0]
    n_rec_max = nsteps // record_every + 1
    rec = np.empty((n_rec_max, n, m))
    rec[0] = X0
    n_rec = 1
    K = np.zeros((s, n, m))
    Y = X0.copy()
    tmp = np.empty_like(Y)
    Ynew = np.empty_like(Y)
    d = np.empty(m)
    acc = np.empty(m)
    for k in range(nsteps):
        t = t0 + k * dt
        for st in range(s):
            for i in range(n):
                for a in range(m):
                    v = Y[i, a]
                    for j in range(st):
                        v += dt * A[st, j] * K[j, i, a]
                    tmp[i, a] = v
            network_rhs_kernel(fkind, fp, ckind, G, W, alpha, bias, t + c[st] * dt, tmp, K[st], d, acc)
        for i in range(n):
            for a in range(m):
                v = 0.0
                for st in range(s):
                    v += b[st] * K[st, i, a]
                Ynew[i, a] = Y[i, a] + dt * v
        nrm = _max_node_norm(Ynew)
        if not nrm <= guard:
            return rec, n_rec, k, True
        Y[:, :] = Ynew
        if (k + 1) % record_every == 0:
            rec[n_rec] = Y
            n_rec += 1
    return rec, n_rec, nsteps, False
