import numpy as np
import pytest

from illg.energy import (
    EnergyReport,
    energy_law_residual,
    exchange_energy,
    kinetic_energy,
    ll_energy,
    total_energy,
)
from illg.grid import Grid, apply_laplacian, cell_centers
from illg.physics import AppliedFieldSpec, FieldModel
from illg.stepper import StepperConfig, initialize, step

from conftest import random_unit


def test_uniform_easy_axis_has_zero_energy():
    g = Grid(3, 2, 2, 0.1, 0.1, 0.1)
    rep = ll_energy(g, g.uniform([1, 0, 0]), epsilon=1.0, q=0.5)
    assert rep.F == 0.0 and rep.J == 0.0


def test_self_energy_of_unit_cube():
    g = Grid(1, 1, 1, 1, 1, 1)
    m = g.uniform([1, 0, 0])
    rep = ll_energy(g, m, 1.0, 0.0, h_stray=-m / 3)
    assert rep.stray == pytest.approx(1 / 6, rel=1e-15)
    assert rep.stray >= 0


def test_kinetic_example():
    g = Grid(1, 1, 1, 1, 1, 1)
    m_prev = g.uniform([0, 0, 0])
    m_curr = g.uniform([0, 0, 2 * 0.1])  # |dm/dt| = 2 with dt = 0.1
    # alpha * eta / 2 = 0.5
    assert kinetic_energy(g, m_curr, m_prev, 0.1, 1.0, 1.0) == pytest.approx(2.0, rel=1e-14)


def test_parts_sum_and_si_scale(rng):
    g = Grid(4, 3, 2, 0.2, 0.3, 0.4)
    m = random_unit(rng, g.shape)
    hs = rng.normal(size=g.shape + (3,))
    rep = ll_energy(g, m, 0.3, 0.2, h_applied=(0.1, -0.2, 0.05), h_stray=hs, scale=7.0)
    assert rep.F == rep.exchange + rep.anisotropy + rep.zeeman + rep.stray
    assert rep.F_joules == pytest.approx(7.0 * rep.F, rel=1e-15)
    assert rep.J == rep.F  # no kinetic part yet


def test_exchange_summation_by_parts(rng):
    g = Grid(5, 4, 3, 0.2, 0.25, 0.5)
    m = random_unit(rng, g.shape)
    e = exchange_energy(g, m, 1.7)
    via_lap = -0.5 * 1.7 * np.sum(m * apply_laplacian(g, m)) * g.cell_volume
    assert e == pytest.approx(via_lap, rel=1e-13)
    assert exchange_energy(g, g.uniform([0, 0.6, 0.8]), 1.7) == 0.0
    assert e > 0


def test_zeeman_linear(rng):
    g = Grid(3, 3, 1, 1, 1, 1)
    m = random_unit(rng, g.shape)
    h1, h2 = np.array([0.1, 0.2, -0.3]), np.array([-0.4, 0.0, 0.2])
    z = lambda h: ll_energy(g, m, 0, 0, h_applied=h).zeeman  # noqa: E731
    assert z(2 * h1 + 3 * h2) == pytest.approx(2 * z(h1) + 3 * z(h2), rel=1e-13)


def test_total_energy(rng):
    g = Grid(3, 2, 1, 1, 1, 1)
    m1, m0 = random_unit(rng, g.shape), random_unit(rng, g.shape)
    F = ll_energy(g, m1, 1.0, 0.1)
    assert total_energy(F, g, m1, m1, 0.1, 0.5, 2.0).J == F.F
    assert total_energy(F, g, m1, m0, 0.1, 0.0, 2.0).J == F.F
    assert total_energy(F, g, m1, m0, 0.1, 0.5, 0.0).J == F.F
    J = total_energy(F, g, m1, m0, 0.1, 0.5, 2.0)
    assert J.J > J.F and J.kinetic > 0


def test_residual_stationary_and_errors():
    g = Grid(2, 1, 1, 1, 1, 1)
    m = g.uniform([1, 0, 0])
    assert energy_law_residual(g, [m, m, m], [0.5, 0.5, 0.5], 0.1, 0.1, 1.0) == 0.0
    with pytest.raises(ValueError):
        energy_law_residual(g, [m, m], [0.0, 0.0], 0.1, 0.1, 1.0)


def test_residual_second_order_in_dt():
    g = Grid(12, 1, 1, 1 / 12, 1, 1)
    x = cell_centers(g)[..., 0]
    th = 0.6 * np.cos(np.pi * x)
    m0 = np.stack([np.cos(th), np.sin(th), 0 * th], -1)
    eps, q, alpha, eta, h = 0.05, 0.5, 0.1, 0.5, (0.0, 0.0, 0.2)
    fm = FieldModel(q, applied=AppliedFieldSpec(constant=h))
    T, res, dts = 0.4, [], []
    for nt in (40, 80, 160):
        dt = T / nt
        cfg = StepperConfig(eps, alpha, eta, dt)
        s = initialize(g, m0, dt)
        levels = [s.m_prev, s.m_curr]
        while s.step < nt:
            s = step(s, fm, cfg)
            levels.append(s.m_curr)
        tail = levels[-3:]
        F = [ll_energy(g, m, eps, q, h).F for m in tail]
        res.append(abs(energy_law_residual(g, tail, F, dt, alpha, eta)))
        dts.append(dt)
    order = np.polyfit(np.log(dts), np.log(res), 1)[0]
    assert 1.8 <= order <= 2.3


def test_report_defaults():
    r = EnergyReport(1.0, 2.0, -0.5, 0.25)
    assert r.F == 2.75 and r.J == 2.75 and r.F_joules == 2.75
