import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from illg.grid import Grid, unit_deviation
from illg.krylov import ConvergenceError, KrylovConfig
from illg.physics import FieldModel
from illg.stepper import (
    SolverFailure,
    SolverState,
    StepperConfig,
    _advance,
    apply_system_operator,
    apply_verification_operator,
    assemble_rhs,
    initialize,
    step,
    step_verification,
    system_matrix,
)

from conftest import random_unit

E1, E2, E3 = np.eye(3)


def probe(grid, fn):
    """Dense matrix of a linear map on fields, columns in C order with components fastest."""
    n = 3 * grid.n_cells
    A = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        A[:, i] = fn(e.reshape(grid.shape + (3,))).ravel()
    return A


def scalar_rhs(grid, m_n, m_p, f, cfg):
    """Cell-by-cell re-evaluation of the right-hand side with explicit ghost cells."""
    nx, ny, nz = grid.shape
    out = np.zeros_like(m_n)
    h = grid.spacing
    for j in range(nx):
        for k in range(ny):
            for l in range(nz):
                lap = np.zeros(3)
                for axis, (idx, n) in enumerate(zip((j, k, l), (nx, ny, nz))):
                    if n == 1:
                        continue
                    lo = list((j, k, l))
                    hi = list((j, k, l))
                    lo[axis] = max(idx - 1, 0)
                    hi[axis] = min(idx + 1, n - 1)
                    lap += (m_p[tuple(lo)] - 2 * m_p[j, k, l] + m_p[tuple(hi)]) / h[axis] ** 2
                mn, mp = m_n[j, k, l], m_p[j, k, l]
                a_minus = cfg.alpha * (1 - 2 * cfg.eta / cfg.dt)
                out[j, k, l] = (
                    mp
                    - cfg.epsilon * cfg.dt * np.cross(mn, lap)
                    - a_minus * np.cross(mn, mp)
                    - 2 * cfg.dt * np.cross(mn, f[j, k, l])
                )
    return out


def test_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(epsilon=1, alpha=0, eta=0, dt=0.0)
    with pytest.raises(ValueError):
        StepperConfig(epsilon=1, alpha=0, eta=0, dt=1.0, mode="other")
    cfg = StepperConfig(epsilon=1, alpha=0.1, eta=2.0, dt=0.5)
    assert cfg.shift_implicit == pytest.approx(0.1 * 9)
    assert cfg.shift_explicit == pytest.approx(0.1 * -7)


def test_initialize():
    g = Grid(3, 2, 1, 1, 1, 1)
    s = initialize(g, g.uniform(E1), 0.1)
    assert s.step == 1 and s.time == pytest.approx(0.1)
    assert np.array_equal(s.m_prev, g.uniform(E1)) and np.array_equal(s.m_curr, s.m_prev)
    bad = g.uniform(E1)
    bad[1, 0, 0] = [2.0, 0, 0]
    with pytest.raises(ValueError):
        initialize(g, bad, 0.1)


def test_operator_examples():
    g = Grid(1, 1, 1, 1, 1, 1)
    cfg = StepperConfig(epsilon=0.0, alpha=0.3, eta=0.0, dt=1.0)
    m = g.uniform(E1)
    assert np.allclose(apply_system_operator(g, m, m, cfg), m, atol=0)
    cfg = StepperConfig(epsilon=0.0, alpha=1.0, eta=0.0, dt=1.0)  # alpha (1 + 2 eta/dt) = 1
    out = apply_system_operator(g, m, g.uniform(E2), cfg)
    assert out.ravel().tolist() == [0.0, 1.0, -1.0]


def test_rhs_examples():
    g = Grid(1, 1, 1, 1, 1, 1)
    s = initialize(g, g.uniform(E1), 0.1)
    cfg = StepperConfig(epsilon=2.0, alpha=0.4, eta=3.0, dt=0.1)
    assert np.array_equal(assemble_rhs(s, g.zeros(), cfg), g.uniform(E1))
    cfg = StepperConfig(epsilon=0.0, alpha=1.0, eta=0.0, dt=1.0)  # alpha (1 - 2 eta/dt) = 1
    s = SolverState(g, m_prev=g.uniform(E2), m_curr=g.uniform(E1), step=1, dt=1.0)
    assert assemble_rhs(s, g.zeros(), cfg).ravel().tolist() == [0.0, 1.0, -1.0]


def test_rhs_matches_scalar_reimplementation(rng):
    g = Grid(4, 3, 2, 0.3, 0.5, 0.7)
    cfg = StepperConfig(epsilon=0.8, alpha=0.05, eta=0.3, dt=0.02)
    m_n, m_p = random_unit(rng, g.shape), random_unit(rng, g.shape)
    f = rng.normal(size=g.shape + (3,))
    s = SolverState(g, m_p, m_n, 3, cfg.dt)
    ours = assemble_rhs(s, f, cfg)
    ref = scalar_rhs(g, m_n, m_p, f, cfg)
    assert np.max(np.abs(ours - ref)) <= 1e-14 * np.max(np.abs(ref)) * 10


def test_dense_probe_matches_matrix_free_on_three_cells(rng):
    g = Grid(3, 1, 1, 0.5, 1, 1)
    cfg = StepperConfig(epsilon=1.3, alpha=0.1, eta=0.7, dt=0.05)
    m = random_unit(rng, g.shape)
    A = probe(g, lambda v: apply_system_operator(g, m, v, cfg))
    for _ in range(20):
        v = rng.normal(size=g.shape + (3,))
        direct = apply_system_operator(g, m, v, cfg).ravel()
        assert np.max(np.abs(A @ v.ravel() - direct)) <= 1e-13 * max(1.0, np.abs(direct).max())


@pytest.mark.parametrize("shape", [(1, 1, 1), (4, 1, 1), (2, 3, 1), (3, 3, 3), (4, 4, 4)])
@pytest.mark.parametrize("mode", ["full_illg", "linear"])
def test_sparse_matrix_equals_probe(shape, mode, rng):
    g = Grid(*shape, 0.4, 0.6, 0.5)
    if mode == "linear":
        cfg = StepperConfig(epsilon=1.0, alpha=0.01, eta=1.0, dt=0.01, mode="verification", verification_form="linear")
        fn = apply_verification_operator
    else:
        cfg = StepperConfig(epsilon=0.7, alpha=0.02, eta=0.3, dt=0.05)
        fn = apply_system_operator
    m = random_unit(rng, g.shape)
    A = probe(g, lambda v: fn(g, m, v, cfg))
    B = system_matrix(g, m, cfg).toarray()
    assert np.max(np.abs(A - B)) <= 1e-13 * np.abs(A).max()


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    dt=st.sampled_from([1e-3, 1.0, 1e3]),
    eps=st.floats(0, 10),
    alpha=st.floats(0, 1),
    eta=st.floats(0, 100),
)
def test_operator_nonsingular(seed, dt, eps, alpha, eta):
    r = np.random.default_rng(seed)
    g = Grid(3, 2, 2, 0.5, 0.5, 0.5)
    cfg = StepperConfig(epsilon=eps, alpha=alpha, eta=eta, dt=dt)
    A = system_matrix(g, random_unit(r, g.shape), cfg).toarray()
    assert np.linalg.svd(A, compute_uv=False)[-1] > 1e-12


def test_equilibrium_is_stationary():
    g = Grid(4, 3, 1, 0.1, 0.1, 0.1)
    cfg = StepperConfig(epsilon=1e-3, alpha=0.02, eta=0.2, dt=0.01)
    s = initialize(g, g.uniform(E1), cfg.dt)
    fm = FieldModel(q=6e-4)
    for _ in range(5):
        s = step(s, fm, cfg)
    assert np.max(np.abs(s.m_curr - g.uniform(E1))) <= 1e-12


def test_step_invariants(rng):
    g = Grid(5, 4, 2, 0.2, 0.2, 0.2)
    cfg = StepperConfig(epsilon=0.5, alpha=0.05, eta=0.5, dt=0.01)
    m0 = random_unit(rng, g.shape)
    s = initialize(g, m0, cfg.dt)
    fm = FieldModel(q=0.3, applied=None)
    for _ in range(10):
        s = step(s, fm, cfg, audit=True)
        assert unit_deviation(s.m_curr) <= 1e-13
        assert s.dot_identity_error <= 100 * cfg.krylov.tol
        assert s.report.converged


def test_gmres_and_direct_agree(rng):
    g = Grid(4, 3, 2, 0.3, 0.3, 0.3)
    m0 = random_unit(rng, g.shape)
    fm = FieldModel(q=0.2)
    runs = []
    for solver in ("gmres", "direct"):
        cfg = StepperConfig(epsilon=0.4, alpha=0.1, eta=0.2, dt=0.01, linear_solver=solver)
        s = initialize(g, m0, cfg.dt)
        for _ in range(5):
            s = step(s, fm, cfg)
        runs.append(s.m_curr)
    assert np.max(np.abs(runs[0] - runs[1])) <= 1e-10


def test_previous_initial_guess_same_solution(rng):
    g = Grid(4, 3, 1, 0.3, 0.3, 0.3)
    m0 = random_unit(rng, g.shape)
    out = []
    for guess in ("zero", "previous"):
        cfg = StepperConfig(epsilon=0.4, alpha=0.1, eta=0.2, dt=0.01, initial_guess=guess)
        s = initialize(g, m0, cfg.dt)
        out.append(step(s, FieldModel(q=0.1), cfg).m_curr)
    assert np.max(np.abs(out[0] - out[1])) <= 1e-10


def test_gmres_failure_raises(rng):
    g = Grid(6, 6, 1, 0.1, 0.1, 0.1)
    cfg = StepperConfig(epsilon=1.0, alpha=0.1, eta=0.5, dt=0.1, krylov=KrylovConfig(max_iters=1))
    s = initialize(g, random_unit(rng, g.shape), cfg.dt)
    with pytest.raises(ConvergenceError):
        step(s, FieldModel(q=0.0), cfg)


def test_projection_failure_reports_step():
    g = Grid(2, 1, 1, 1, 1, 1)
    s = initialize(g, g.uniform(E1), 0.1)
    with pytest.raises(SolverFailure) as err:
        _advance(s, g.zeros(), None, audit=False)
    assert err.value.step == 1


def test_verification_stationary_without_source():
    g = Grid(5, 1, 1, 0.2, 1, 1)
    cfg = StepperConfig(epsilon=1.0, alpha=0.01, eta=10.0, dt=0.01, mode="verification")
    s = initialize(g, g.uniform(E3), cfg.dt)
    for _ in range(3):
        s = step_verification(s, lambda t: g.zeros(), cfg)
    assert np.max(np.abs(s.m_curr - g.uniform(E3))) <= 1e-13


def test_mode_guards():
    g = Grid(1, 1, 1, 1, 1, 1)
    s = initialize(g, g.uniform(E1), 0.1)
    with pytest.raises(ValueError):
        step(s, FieldModel(q=0), StepperConfig(epsilon=1, alpha=0, eta=0, dt=0.1, mode="verification"))
    with pytest.raises(ValueError):
        step_verification(s, lambda t: g.zeros(), StepperConfig(epsilon=1, alpha=0, eta=0, dt=0.1))
