"""Acceptance criteria, one test each.

Every test records a one-line measured summary; the run prints a PASS/FAIL
line per criterion at the end (see ``conftest.py``).
"""
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from syncnet import export
from syncnet.dynamics import (NetworkSystem, constant_biases, integrate, jordan_coupling,
                              linear_coupling, linear_decay, lorenz, network_rhs,
                              nonautonomous_linear, scalar_coupling, simulate, tanh_coupling)
from syncnet.experiments import (RunConfig, beta_sweep, classify_run, initial_state,
                                 pairwise_spread, persistence_experiment, sync_error)
from syncnet.linalg import eigenvalues, jordan_perturbation_basis, kronecker, operator_norm
from syncnet.network import build_laplacian, counterexample_weights, ring_weights
from syncnet.stability import compute_gamma, coupling_spec

L22 = np.array([[3.0, -2, -1], [0, 2, -2], [-1, 0, 1]])
G22 = np.array([[2.0, 1], [-17, 0]])
PAIR = np.array([[0.0, 1], [1, 0]])


def match_error(a, b):
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


def rotating_pair(coupling, alpha=0.0, **kw):
    f, _ = nonautonomous_linear()
    return RunConfig(NetworkSystem(f, coupling, PAIR, alpha), **kw)


def lorenz_ring(coupling, alpha=0.0, **kw):
    return RunConfig(NetworkSystem(lorenz(), coupling, ring_weights(3), alpha), **kw)


def note(request, text):
    request.node.user_properties.append(("detail", text))
    print(text)


@pytest.mark.criterion(1, "spectral exactness on the directed counterexample")
def test_spectral_exactness(request):
    t0 = time.perf_counter()
    e_L = match_error(eigenvalues(L22), [0, 3 + 1j, 3 - 1j])
    e_G = match_error(eigenvalues(G22), [1 + 4j, 1 - 4j])
    gamma = compute_gamma(build_laplacian(counterexample_weights()), coupling_spec(G22))
    elapsed = time.perf_counter() - t0
    note(request, f"eig(L) err={e_L:.1e} eig(Gamma) err={e_G:.1e} gamma={gamma:.12f}")
    assert e_L < 1e-9 and e_G < 1e-9
    assert abs(gamma + 1) < 1e-9
    assert elapsed < 1


@pytest.mark.criterion(2, "Jordan perturbation basis identities")
def test_jordan_basis(request):
    t0 = time.perf_counter()
    worst_inv = worst_diag = worst_norm = 0.0
    for m in range(1, 9):
        for eps in (1e-3, 1e-1, 1.0):
            b = jordan_perturbation_basis(m, 0.7 - 0.2j, eps)
            kappa = b.kappa_inf
            worst_inv = max(worst_inv, np.abs(b.R @ b.Rinv - np.eye(m)).max() / kappa)
            D = b.Rinv @ (b.J + b.E) @ b.R
            worst_diag = max(worst_diag, np.abs(D - np.diag(np.diag(D))).max() / kappa)
            norm = operator_norm(b.Rinv @ b.E @ b.R, "inf")
            worst_norm = max(worst_norm, abs(norm - max(2 * m - 3, m - 1) * eps))
    elapsed = time.perf_counter() - t0
    note(request, f"|RR^-1 - I|/kappa={worst_inv:.1e} offdiag/kappa={worst_diag:.1e} "
                  f"norm err={worst_norm:.1e}")
    assert worst_inv <= 1e-9
    assert worst_diag <= 1e-9
    assert worst_norm <= 1e-10
    assert elapsed < 1


@pytest.mark.criterion(3, "integrator oracle on the rotating linear system")
def test_integrator_oracle(request):
    t0 = time.perf_counter()
    f, sol = nonautonomous_linear()
    x0 = np.array([5.0, 5.0])
    tr = integrate(f.eval, x0, 0.0, 0.5, 1e-3, "rk6")
    rel = np.linalg.norm(tr.final - sol(0.5)) / np.linalg.norm(sol(0.5))

    def order(method, steps):
        # dt = 1/N so every run ends exactly at t = 1
        dts = 1.0 / np.asarray(steps, dtype=float)
        errs = []
        for dt in dts:
            run = integrate(f.eval, x0, 0.0, 1.0, dt, method)
            errs.append(np.linalg.norm(run.final - sol(run.times[-1])))
        return np.polyfit(np.log(dts), np.log(errs), 1)[0]

    p4 = order("rk4", [50, 100, 200, 500])
    p6 = order("rk6", [20, 40, 80, 200])
    elapsed = time.perf_counter() - t0
    note(request, f"rel err={rel:.1e} order rk4={p4:.2f} rk6={p6:.2f}")
    assert rel < 1e-7
    assert abs(p4 - 4) <= 0.5
    assert abs(p6 - 6) <= 0.7
    assert elapsed < 5


@pytest.mark.criterion(4, "instability of the uncoupled pair, synchronisation for alpha >= 5")
def test_dichotomy(request):
    t0 = time.perf_counter()
    free = classify_run(rotating_pair(scalar_coupling(1.0, 2), 0.0))
    coupled = {a: classify_run(rotating_pair(scalar_coupling(1.0, 2), a)) for a in (5.0, 10.0, 20.0)}
    elapsed = time.perf_counter() - t0
    note(request, f"alpha=0 rate={free.decay_rate:.2f}; " + " ".join(
        f"alpha={a:g} rate={r.decay_rate:.2f}" for a, r in coupled.items()))
    assert free.decay_rate >= 1.5 and not free.synchronised
    for r in coupled.values():
        assert r.synchronised
        assert r.decay_rate <= -1
    assert elapsed < 10


@pytest.mark.criterion(5, "critical coupling slope against beta for a Jordan coupling")
def test_jordan_slope(request):
    t0 = time.perf_counter()
    grid = np.geomspace(0.05, 0.5, 8)
    sweep = beta_sweep(rotating_pair(jordan_coupling(0.05, 2), t_end=50.0), grid, (0.0, 10.0),
                       tol=1e-2, rel_tol=1e-3, scan_points=12)
    elapsed = time.perf_counter() - t0
    table = " ".join(f"{r.beta:.3g}:{r.alpha_c:.4g}" for r in sweep.results if r.alpha_c is not None)
    note(request, f"slope={sweep.slope:.3f} (beta:alpha_c {table})")
    assert all(r.alpha_c is not None for r in sweep.results)
    assert -1.25 <= sweep.slope <= -0.75
    assert elapsed < 600


@pytest.mark.criterion(6, "Lorenz ring critical coupling nearly independent of beta")
def test_lorenz_ring_rho(request):
    t0 = time.perf_counter()
    grid = np.geomspace(0.5, 8.0, 6)
    sweep = beta_sweep(lorenz_ring(scalar_coupling(1.0, 3), t_burn=20.0, t_end=50.0, dt=1e-3), grid,
                       (0.0, 10.0), tol=1e-4, rel_tol=1e-2)
    elapsed = time.perf_counter() - t0
    rho = np.array([r.rho_c for r in sweep.results])
    note(request, f"rho_c max/min={rho.max() / rho.min():.3f} (rho_c {np.round(rho, 3).tolist()})")
    assert np.all(rho > 0)
    assert rho.max() / rho.min() < 2
    assert elapsed < 1800


@pytest.mark.criterion(7, "coupling destabilises a stable fixed point")
def test_counterexample(request):
    t0 = time.perf_counter()
    W = counterexample_weights()
    coupled = NetworkSystem(linear_decay(0.1, 2), linear_coupling(G22), W, 1.0)
    X0 = np.random.default_rng(0).uniform(-0.1, 0.1, (3, 2))
    tr = simulate(coupled, X0, 0.0, 50.0, 1e-3, record_every=100)
    iso = simulate(coupled.isolated(), X0[:1], 0.0, 50.0, 1e-3, record_every=100)
    elapsed = time.perf_counter() - t0
    note(request, f"diverged={tr.diverged} at t={tr.t_diverged}; isolated |x(50)|={np.linalg.norm(iso.final):.2e}")
    assert tr.diverged and tr.t_diverged < 50
    assert not iso.diverged and np.linalg.norm(iso.final) < np.linalg.norm(X0[0])
    assert elapsed < 5


@pytest.mark.criterion(8, "persistence: error linear in eps0, decreasing in alpha")
def test_persistence_scaling(request):
    t0 = time.perf_counter()

    def limsup(alpha, eps0):
        s = NetworkSystem(lorenz(), scalar_coupling(1.0, 3), ring_weights(3), alpha,
                          bias=constant_biases(3, 3, eps0, 0), eps0=eps0)
        cfg = RunConfig(s, t_burn=20.0, t_end=70.0, dt=1e-3)
        res = persistence_experiment(cfg, 0.5)
        assert not res.diverged
        return res.limsup_estimate

    lo, hi = limsup(8.0, 0.01), limsup(8.0, 0.02)
    doubled = limsup(16.0, 0.01)
    elapsed = time.perf_counter() - t0
    note(request, f"limsup ratio={hi / lo:.3f}; alpha 8->16 limsup {lo:.2e}->{doubled:.2e}")
    assert abs(hi / lo - 2) <= 0.4
    assert doubled < lo
    assert elapsed < 600


@pytest.mark.criterion(9, "property suites")
def test_properties(request, tmp_path):
    t0 = time.perf_counter()

    @settings(max_examples=1000, deadline=None, derandomize=True)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def kron_spectrum(p, q, seed):
        rng = np.random.default_rng(seed)
        A, B = rng.uniform(-1, 1, (p, p)), rng.uniform(-1, 1, (q, q))
        prods = (eigenvalues(A)[:, None] * eigenvalues(B)[None, :]).ravel()
        assert match_error(eigenvalues(kronecker(A, B)), prods) < 1e-8

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1))
    def permutation_invariance(n, seed):
        rng = np.random.default_rng(seed)
        W = rng.uniform(0.2, 2.0, (n, n))
        np.fill_diagonal(W, 0)
        perm = rng.permutation(n)
        cs = coupling_spec(rng.uniform(-1, 1, (2, 2)) + 2 * np.eye(2))
        g1 = compute_gamma(build_laplacian(W), cs)
        g2 = compute_gamma(build_laplacian(W[np.ix_(perm, perm)]), cs)
        assert abs(g1 - g2) <= 1e-9 * max(1.0, abs(g1))
        X = rng.standard_normal((n, 3))
        assert pairwise_spread(X[perm]) == pytest.approx(pairwise_spread(X), rel=1e-12)
        assert sync_error(X[perm]) == pytest.approx(sync_error(X), rel=1e-12)

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(st.lists(st.floats(-50, 50), min_size=3, max_size=3), st.floats(0, 100),
           st.integers(2, 6), st.booleans())
    def diffusive_invariance(x, alpha, n, tanh):
        G = np.array([[1.0, 0.3, 0], [0, 2, 0], [0.5, 0, 1]])
        W = np.random.default_rng(n).uniform(0, 3, (n, n))
        np.fill_diagonal(W, 0)
        s = NetworkSystem(lorenz(), tanh_coupling(G) if tanh else linear_coupling(G), W, alpha)
        X = np.tile(x, (n, 1))
        assert np.all(network_rhs(s, 0.0, X) == lorenz()(0, np.array(x)))

    kron_spectrum()
    permutation_invariance()
    diffusive_invariance()

    def csv_bytes():
        cfg = lorenz_ring(scalar_coupling(1.0, 3), 2.0, t_burn=5.0, t_end=8.0, dt=1e-3, seed=42)
        X0, _ = initial_state(cfg)
        tr = simulate(cfg.system, X0, cfg.t_burn, cfg.t_end, cfg.dt, record_every=10)
        return export.write_trajectory_csv(tr).encode()

    first, second = csv_bytes(), csv_bytes()
    elapsed = time.perf_counter() - t0
    note(request, f"kronecker 1000, permutation 200, diffusive 200, csv {len(first)} bytes identical")
    assert first == second
    assert elapsed < 600
