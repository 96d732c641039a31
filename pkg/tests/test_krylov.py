import numpy as np
import pytest
import scipy.sparse.linalg as spla

from illg.grid import Grid
from illg.krylov import (
    KrylovConfig,
    condition_number_1d,
    condition_number_3d,
    damping_shift,
    gmres_solve,
)
from illg.stepper import StepperConfig, system_matrix


def test_config_validation():
    with pytest.raises(ValueError):
        KrylovConfig(tol=0.0)
    with pytest.raises(ValueError):
        KrylovConfig(restart=0)


def test_identity_one_iteration(rng):
    b = rng.normal(size=(4, 3))
    x, rep = gmres_solve(lambda v: v, b)
    assert rep.iterations == 1 and rep.converged
    assert np.allclose(x, b, rtol=0, atol=1e-15)


def test_zero_rhs_zero_iterations():
    x, rep = gmres_solve(lambda v: 2 * v, np.zeros(5))
    assert rep.iterations == 0 and rep.converged
    assert np.all(x == 0)


def test_cross_product_system():
    # (I + e1x) x = e2. Writing x = (0, a, b): e1 x x = (0, -b, a), so a - b = 1 and
    # a + b = 0, i.e. x = (0, 1/2, -1/2). (0, 1/2, 1/2) would map to e3 instead.
    e1 = np.array([1.0, 0.0, 0.0])
    M = np.eye(3) + np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]])
    oracle = np.linalg.solve(M, [0.0, 1.0, 0.0])
    assert np.allclose(oracle, [0.0, 0.5, -0.5], rtol=0, atol=1e-15)
    x, rep = gmres_solve(lambda v: v + np.cross(e1, v), np.array([0.0, 1.0, 0.0]))
    assert rep.converged and rep.iterations <= 3
    assert np.allclose(x, oracle, rtol=0, atol=1e-14)


@pytest.mark.parametrize("n", [3, 12])
def test_converges_within_dimension(n, rng):
    A = np.eye(n) + rng.normal(size=(n, n)) / np.sqrt(n)
    b = rng.normal(size=n)
    x, rep = gmres_solve(lambda v: A @ v, b, cfg=KrylovConfig(tol=1e-12, restart=n))
    assert rep.converged and rep.iterations <= n
    assert np.linalg.norm(A @ x - b) <= 1e-12 * np.linalg.norm(b) * 10


def test_residual_monotone_within_cycle(rng):
    n = 40
    A = np.eye(n) * 2 + rng.normal(size=(n, n)) / np.sqrt(n)
    b = rng.normal(size=n)
    _, rep = gmres_solve(lambda v: A @ v, b, cfg=KrylovConfig(tol=1e-10, restart=n))
    h = np.array(rep.residual_history)
    assert np.all(np.diff(h[:-1]) <= 1e-12 * h[0])


def test_restarts_and_nonconvergence(rng):
    n = 60
    A = np.diag(np.linspace(1, 1000, n)) + rng.normal(size=(n, n)) * 0.1
    b = rng.normal(size=n)
    x, rep = gmres_solve(lambda v: A @ v, b, cfg=KrylovConfig(tol=1e-10, restart=5, max_iters=2000))
    assert rep.converged
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b) * 1.0001
    _, rep = gmres_solve(lambda v: A @ v, b, cfg=KrylovConfig(tol=1e-10, restart=5, max_iters=7))
    assert not rep.converged and rep.iterations == 7


def test_agrees_with_scipy(rng):
    n = 50
    A = np.eye(n) + 0.3 * rng.normal(size=(n, n)) / np.sqrt(n)
    b = rng.normal(size=n)
    ours, _ = gmres_solve(lambda v: A @ v, b, cfg=KrylovConfig(tol=1e-12, restart=50))
    ref, info = spla.gmres(A, b, rtol=1e-12, restart=50)
    assert info == 0
    assert np.allclose(ours, ref, rtol=1e-9, atol=1e-10)
    assert np.allclose(ours, np.linalg.solve(A, b), rtol=1e-10, atol=1e-11)


def test_initial_guess_used(rng):
    A = np.eye(6) * 3
    b = rng.normal(size=6)
    x, rep = gmres_solve(lambda v: A @ v, b, x0=b / 3)
    assert rep.iterations == 0 and np.allclose(x, b / 3)
    with pytest.raises(ValueError):
        gmres_solve(lambda v: v, b, x0=np.zeros(5))


def probed_kappa(grid, cfg):
    A = system_matrix(grid, grid.uniform([1.0, 0.0, 0.0]), cfg).toarray()
    s = np.linalg.svd(A, compute_uv=False)
    return s[0] / s[-1]


def test_condition_number_trivial_cases():
    assert condition_number_1d(0.0, 0.1, 0.1, 0.0, 5.0).kappa == 1.0
    k = condition_number_3d(0.0, 0.2, 1, 1, 1, 0.1, 3.0).kappa
    assert k == pytest.approx(np.sqrt(1 + (0.1 * (1 + 2 * 3.0 / 0.2)) ** 2), rel=1e-15)
    a = condition_number_1d(1.0, 0.1, 0.1, 0.1, 1.0).kappa
    b = condition_number_1d(1.0, 0.1, 0.1, 0.2, 1.0).kappa
    assert b > a
    # equal spacings: three times the 1D Laplacian term inside the bracket
    lam3 = condition_number_3d(0.5, 0.01, 0.1, 0.1, 0.1, 0.0, 0.0).lambda_max
    lam1 = condition_number_1d(0.5, 0.01, 0.1, 0.0, 0.0).lambda_max
    assert lam3 == pytest.approx(3 * lam1, rel=1e-15)
    assert damping_shift(0.1, 1.0, 0.5) == pytest.approx(0.5)


@pytest.mark.parametrize("eps, dt, alpha, eta", [(1.0, 1e-3, 0.01, 1.0), (0.3, 0.05, 0.1, 0.2), (1.0, 1.0, 0.0, 0.0)])
def test_condition_number_1d_matches_svd(eps, dt, alpha, eta):
    nx = 16
    g = Grid(nx, 1, 1, 1.0 / nx, 1.0, 1.0)
    cfg = StepperConfig(epsilon=eps, alpha=alpha, eta=eta, dt=dt)
    est = condition_number_1d(eps, dt, g.dx, alpha, eta, nx=nx)
    assert est.kappa == pytest.approx(probed_kappa(g, cfg), rel=1e-6)
    # the mesh-independent bound is never below the exact value
    assert condition_number_1d(eps, dt, g.dx, alpha, eta).kappa >= est.kappa


def test_condition_number_3d_matches_svd():
    g = Grid(4, 3, 3, 0.25, 0.4, 0.3)
    cfg = StepperConfig(epsilon=0.2, alpha=0.05, eta=0.5, dt=0.01)
    est = condition_number_3d(0.2, 0.01, g.dx, g.dy, g.dz, 0.05, 0.5, shape=g.shape)
    assert est.kappa == pytest.approx(probed_kappa(g, cfg), rel=1e-6)
