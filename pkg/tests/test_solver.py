import numpy as np
import pytest

from fastkinetic.bgk import BgkParams, bgk_step
from fastkinetic.cases import init_sod, init_vortex
from fastkinetic.conservation import Projector
from fastkinetic.grid import SolidBox, SpatialGrid, VelocityGrid
from fastkinetic.macro import equilibrium_project
from fastkinetic.solver import (
    EXIT_INSTABILITY,
    EXIT_OK,
    InstabilityError,
    Model,
    Solver,
    compute_dt,
)
from fastkinetic.spectral import SpectralConfig

SOD_GRID = SpatialGrid(1, (100,), ((0.0, 2.0),), boundaries=[("dirichlet", "dirichlet")])
SOD_V = VelocityGrid(2, 64, 15.0)
# transport bound dx / max|v| with max|v| = 15 - 15/64 on the cell-centred lattice
SOD_TRANSPORT_DT = 1.3544973544973545e-3


def _uniform(grid, vg, U):
    proj = Projector(vg)
    E = equilibrium_project(np.asarray(U, dtype=float), vg, proj).ravel()
    return np.broadcast_to(E, grid.shape + (vg.size,)).copy()


def test_compute_dt_sod_reference():
    euler = Model.euler()
    assert compute_dt(SOD_GRID, SOD_V, euler) == pytest.approx(SOD_TRANSPORT_DT, rel=1e-14)
    assert SOD_TRANSPORT_DT == pytest.approx(1.33e-3, rel=0.02)
    model = Model.boltzmann(SpectralConfig.for_grid(SOD_V, tau=1e-3))
    U = np.array([[1.0, 0, 0, 1.25], [0.125, 0, 0, 0.025]])
    assert compute_dt(SOD_GRID, SOD_V, model, U) == pytest.approx(1e-3, rel=1e-14)


def test_compute_dt_other_bounds():
    g0 = SpatialGrid(0)
    vg = VelocityGrid(3, 8, 5.0)
    hs = SpectralConfig.for_grid(vg, tau=0.3)
    assert compute_dt(g0, vg, Model.boltzmann(hs)) == pytest.approx(0.3 / hs.loss_bound)
    assert hs.loss_bound == pytest.approx(4 * np.pi / (3 + np.sqrt(2)), rel=1e-14)
    bgk = Model.bgk_model(BgkParams(tau=0.5, frequency="constant", mu=4.0))
    assert compute_dt(g0, vg, bgk) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        compute_dt(g0, vg, Model.euler())
    with pytest.raises(ValueError):
        compute_dt(g0, VelocityGrid(2, 8, 5.0), Model.boltzmann(SpectralConfig(2, 8, 5.0)))


def test_model_validation():
    with pytest.raises(ValueError):
        Model("navier-stokes")
    with pytest.raises(ValueError):
        Model("boltzmann")
    with pytest.raises(ValueError):
        Model("bgk")
    vg = VelocityGrid(2, 8, 4.0)
    with pytest.raises(ValueError):
        Solver(SpatialGrid(0), vg, Model.boltzmann(SpectralConfig(2, 16, 4.0)), np.ones(vg.size))


def test_bgk_global_fixed_point():
    vg = VelocityGrid(2, 16, 6.0)
    grid = SpatialGrid(2, (6, 6), ((0.0, 1.0), (0.0, 1.0)))
    f0 = _uniform(grid, vg, [1.0, 0.0, 0.0, 1.0])
    s = Solver(grid, vg, Model.bgk_model(BgkParams(tau=0.1)), f0)
    for _ in range(10):
        s.step(0.02)
    f = s.distribution().reshape(f0.shape)
    assert np.abs(f - f0).max() <= 1e-12 * np.abs(f0).max()


def test_euler_limit_sod_stays_bounded():
    proj = Projector(SOD_V)
    s = Solver(SOD_GRID, SOD_V, Model.euler(), init_sod(SOD_GRID, SOD_V, proj))
    for _ in range(100):
        s.step(s.compute_dt())
    rho = s.moments()[:, 0]
    eps = 0.05
    assert rho.min() >= 0.125 - eps and rho.max() <= 1.0 + eps


def _vortex_solver(model_kind, workers=1, chunk=None, cells=12):
    vg = VelocityGrid(2, 16, 7.5)
    grid = SpatialGrid(2, (cells, cells), ((0.0, 10.0), (0.0, 10.0)))
    proj = Projector(vg)
    f0 = init_vortex(grid, vg, proj)
    if model_kind == "boltzmann":
        model = Model.boltzmann(SpectralConfig.for_grid(vg, tau=0.1))
    else:
        model = Model.bgk_model(BgkParams(tau=0.1))
    return Solver(grid, vg, model, f0, workers=workers, chunk=chunk)


@pytest.mark.parametrize("kind", ["boltzmann", "bgk"])
def test_periodic_conservation_and_collision_invariance(kind):
    s = _vortex_solver(kind)
    start = s.totals()
    for _ in range(5):
        s.step(0.05)
    assert max(s.diagnostics.collision_defect) <= 1e-12
    d = np.abs(s.totals() - start) / np.abs(start).max()
    assert d[0] <= 1e-14
    assert d.max() <= 5 * 1e-11


def test_results_independent_of_workers():
    a = _vortex_solver("boltzmann", workers=1, chunk=7)
    b = _vortex_solver("boltzmann", workers=3, chunk=7)
    for _ in range(3):
        a.step(0.05)
        b.step(0.05)
    assert np.array_equal(a.state.m, b.state.m)


def test_homogeneous_euler_time_error_is_first_order():
    vg = VelocityGrid(2, 16, 6.0)
    proj = Projector(vg)
    pts = vg.points
    f0 = np.exp(-np.sum((pts - 1) ** 2, axis=1)) + 0.5 * np.exp(-np.sum((pts + 1) ** 2, axis=1))
    U = proj.moments(f0)
    E = equilibrium_project(U, vg, proj).ravel()
    tau, mu, T = 1.0, 1.0, 0.8
    exact = E + (f0 - E) * np.exp(-mu * T / tau)
    errs = []
    for n in (8, 16, 32):
        s = Solver(SpatialGrid(0), vg, Model.bgk_model(BgkParams(tau, "constant", mu)), f0)
        s.run(T, dt=T / n)
        errs.append(np.abs(s.distribution().ravel() - exact).max())
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 1.7) & (ratios < 2.3))


def test_instability_is_reported():
    vg = VelocityGrid(2, 8, 4.0)
    grid = SpatialGrid(1, (4,), ((0.0, 1.0),))
    f0 = _uniform(grid, vg, [1.0, 0.0, 0.0, 1.0])
    f0[2] *= -1.0
    s = Solver(grid, vg, Model.bgk_model(BgkParams(tau=1.0)), f0)
    with pytest.raises(InstabilityError):
        s.step(0.01)
    res = Solver(grid, vg, Model.bgk_model(BgkParams(tau=1.0)), f0).run(0.1, dt=0.01)
    assert res.status == EXIT_INSTABILITY and res.steps == 0


def test_run_lands_on_final_time_and_logs():
    vg = VelocityGrid(2, 8, 4.0)
    grid = SpatialGrid(1, (4,), ((0.0, 1.0),))
    s = Solver(grid, vg, Model.bgk_model(BgkParams(tau=1.0)), _uniform(grid, vg, [1.0, 0.0, 0.0, 1.0]))
    res = s.run(0.1, dt=0.03)
    assert res.status == EXIT_OK and res.steps == 4
    assert s.t == pytest.approx(0.1, abs=1e-15)
    assert s.diagnostics.dt[-1] == pytest.approx(0.01)
    rows = list(s.diagnostics.rows())
    assert len(rows) == 4 and len(rows[0]) == len(s.diagnostics.header())


def test_solid_cells_hidden_from_moments():
    vg = VelocityGrid(2, 8, 4.0)
    grid = SpatialGrid(2, (8, 8), ((0.0, 1.0), (0.0, 1.0)), solids=[SolidBox(((3, 4), (3, 4)))])
    s = Solver(grid, vg, Model.euler(), _uniform(grid, vg, [1.0, 0.0, 0.0, 1.0]))
    U = s.moments()
    assert np.all(np.isnan(U[grid.solid])) and np.all(np.isfinite(U[grid.fluid]))
    s.step(s.compute_dt())
    assert np.all(s.state.m[grid.solid] == 0)


def test_dense_cells_are_substepped():
    # rho * dt / tau = 2.5 would break the explicit BGK update; three substeps of dt/3 are taken instead
    vg = VelocityGrid(2, 16, 6.0)
    proj = Projector(vg)
    pts = vg.points
    f0 = np.exp(-np.sum((pts - 1) ** 2, axis=1)) + np.exp(-np.sum((pts + 1) ** 2, axis=1))
    f0 *= 2.5 / proj.moments(f0)[0]
    p = BgkParams(tau=0.1)
    s = Solver(SpatialGrid(0), vg, Model.bgk_model(p), f0)
    s.step(0.1)
    g = f0
    for _ in range(3):
        g = bgk_step(g, 0.1 / 3, p, proj)
    np.testing.assert_allclose(s.distribution().ravel(), g, rtol=0, atol=1e-13 * f0.max())
    np.testing.assert_allclose(proj.moments(s.distribution().ravel()), proj.moments(f0), atol=1e-13)
