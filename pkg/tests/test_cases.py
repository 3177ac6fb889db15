import math

import numpy as np
import pytest

from fastkinetic.cases import (
    CASE_IDS,
    REENTRY3D_STATE,
    T1,
    T2,
    CaseConfig,
    boundary_schedule,
    build_solver,
    default_config,
    exact_bkw,
    init_bkw,
    init_reentry2d,
    init_sod,
    init_two_gaussians,
    init_vortex,
    reentry2d_velocity,
    sod_state,
    two_gaussians_state,
    vortex_state,
)
from fastkinetic.conservation import Projector
from fastkinetic.grid import SpatialGrid, VelocityGrid
from fastkinetic.macro import MacroState
from oracles import bkw_exact

SOD_GRID = SpatialGrid(1, (100,), ((0.0, 2.0),), boundaries=[("dirichlet", "dirichlet")])


def test_bkw_profile_matches_closed_form():
    vg = VelocityGrid(2, 32, 9.0)
    for t in (0.0, 1.0, 10.0):
        np.testing.assert_allclose(exact_bkw(vg.points, t), bkw_exact(vg.speed2, t), rtol=1e-14, atol=1e-300)


def test_bkw_initial_moments():
    vg = VelocityGrid(2, 32, 9.0)
    proj = Projector(vg)
    f0 = init_bkw(vg, proj)
    np.testing.assert_allclose(proj.moments(f0), [1.0, 0.0, 0.0, 1.0], atol=1e-12)


def test_two_gaussian_data():
    vg = VelocityGrid(3, 32, 7.0)
    proj = Projector(vg)
    f0 = init_two_gaussians(vg, proj)
    U = proj.moments(f0)
    assert U[0] == pytest.approx(1.0, abs=1e-12)
    # 0.5 * (3 * 0.2 + |(-1, -1, -0.25)|^2)
    assert two_gaussians_state()[-1] == 1.33125
    np.testing.assert_allclose(U, two_gaussians_state(), atol=1e-12)
    # the two maxima sit on the lattice nodes nearest to +-(-1, -1, -0.25)
    flat = f0.ravel()
    top = np.argsort(flat)[-2:]
    peaks = sorted(tuple(vg.points[k]) for k in top)
    nearest = []
    for c in (np.array([-1.0, -1.0, -0.25]), np.array([1.0, 1.0, 0.25])):
        nearest.append(tuple(vg.axis[np.argmin(np.abs(vg.axis[:, None] - c[None]), axis=0)]))
    assert peaks == sorted(nearest)


def test_sod_data():
    vg = VelocityGrid(2, 64, 15.0)
    proj = Projector(vg)
    f0 = init_sod(SOD_GRID, vg, proj)
    U = proj.moments(f0)
    i_left = int(np.argmin(np.abs(SOD_GRID.centers[0] - 0.5)))
    i_right = int(np.argmin(np.abs(SOD_GRID.centers[0] - 1.5)))
    np.testing.assert_allclose(U[i_left], [1.0, 0.0, 0.0, 2.5], atol=1e-12)
    st = MacroState.from_conserved(U[i_right], 2)
    assert st.rho == pytest.approx(0.125, rel=1e-12) and st.T == pytest.approx(0.25, rel=1e-12)
    assert U[:, 0].sum() * SOD_GRID.spacing == pytest.approx(1.125, rel=1e-12)
    np.testing.assert_allclose(U, sod_state(SOD_GRID, 2).conserved(), atol=1e-12)


def test_vortex_data():
    grid = SpatialGrid(2, (100, 100), ((0.0, 10.0), (0.0, 10.0)))
    st = vortex_state(grid, beta=5.0, gamma=2.0)
    # 90 degree rotation about the centre maps the cell grid onto itself
    assert np.abs(np.rot90(st.T) - st.T).max() <= 1e-12
    assert abs(st.rho[0, 0] - 1.0) < 1e-6 and abs(st.T[0, 0] - 1.0) < 1e-6
    np.testing.assert_allclose(st.u[0, 0], [1.0, 1.0], atol=1e-6)
    # exact centre, with a cell centred on it
    g1 = SpatialGrid(2, (101, 101), ((-0.05, 10.05), (-0.05, 10.05)))
    c = vortex_state(g1)
    dT = -(2.0 - 1.0) * 5.0 / (8 * 2.0 * np.pi**2) * np.e
    assert c.T[50, 50] - 1.0 == pytest.approx(dT, rel=1e-12)
    np.testing.assert_allclose(c.u[50, 50], [1.0, 1.0], atol=1e-14)
    # moments after projection reproduce the analytic fields
    vg = VelocityGrid(2, 16, 7.5)
    small = SpatialGrid(2, (10, 10), ((0.0, 10.0), (0.0, 10.0)))
    U = Projector(vg).moments(init_vortex(small, vg))
    np.testing.assert_allclose(U, vortex_state(small).conserved(), atol=1e-12)


def test_reentry_inflow_schedule():
    np.testing.assert_array_equal(reentry2d_velocity(1.0), [3.0, 0.0])
    c = 3 * math.sqrt(2) / 2
    np.testing.assert_allclose(reentry2d_velocity(T2), [c, c], atol=1e-15)
    np.testing.assert_allclose(reentry2d_velocity(T1 + 1), [2 * math.sqrt(2), 1.0], rtol=1e-15)
    for t in np.linspace(0, 10, 101):
        assert np.linalg.norm(reentry2d_velocity(t)) == pytest.approx(3.0, rel=1e-14)
    for tj in (T1, T2):
        a, b = reentry2d_velocity(tj - 1e-12), reentry2d_velocity(tj + 1e-12)
        assert np.abs(a - b).max() < 1e-5
    with pytest.raises(ValueError):
        reentry2d_velocity(-1.0)


def test_reentry_initial_fields():
    cfg = default_config("reentry2d").replace(cells=(40, 40))
    grid = cfg.spatial_grid()
    assert grid.solid.sum() > 0
    vg = VelocityGrid(2, 16, 10.0)
    f0 = init_reentry2d(grid, vg)
    assert np.all(f0[grid.solid] == 0)
    U = Projector(vg).moments(f0[grid.fluid])
    np.testing.assert_allclose(U, np.broadcast_to([1.0, 3.0, 0.0, 5.5], U.shape), atol=1e-12)
    sched = boundary_schedule(cfg)
    np.testing.assert_allclose(sched.state(0, 0, 0.0), [1.0, 3.0, 0.0, 5.5])
    np.testing.assert_allclose(REENTRY3D_STATE.conserved(), [1.0, 2.0, 0.0, 0.0, 3.5])


@pytest.mark.parametrize("case", [c for c in CASE_IDS if c != "custom"])
def test_default_configs_are_consistent(case):
    cfg = default_config(case)
    vg = cfg.velocity_grid()
    grid = cfg.spatial_grid()
    assert grid.dim == cfg.space_dim
    assert vg.n % 2 == 0
    if cfg.space_dim:
        assert vg.max_abs < vg.bound


def test_reference_parameters():
    b = default_config("bkw2d")
    assert (b.n, b.bound, b.dt, b.t_final, b.angles) == (32, 9.0, 0.02, 10.0, (8,))
    s = default_config("sod2v")
    assert (s.cells, s.n, s.tau, s.t_final) == ((100,), 64, 1e-3, 0.15)
    r = default_config("reentry3d")
    assert (r.cells, r.n, r.tau, r.domain) == ((45, 45, 45), 16, 0.3, ((0.0, 2.0),) * 3)


def test_config_validation():
    with pytest.raises(ValueError):
        CaseConfig("bkw2d", velocity_dim=3, kernel="maxwell", model="boltzmann")
    with pytest.raises(ValueError):
        CaseConfig("custom", n=15)
    with pytest.raises(ValueError):
        CaseConfig("nope")
    with pytest.raises(ValueError):
        CaseConfig("custom", model="bgk", tau=0.0)
    # euler ignores tau
    CaseConfig("custom", model="euler", tau=0.0)


def test_build_solver_small_case():
    cfg = default_config("sod2v").replace(n=16, cells=(20,))
    s = build_solver(cfg)
    np.testing.assert_allclose(s.moments(), sod_state(s.grid, 2).conserved(), atol=1e-12)
    res = s.run(0.01)
    assert res.status == 0
