import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from fastkinetic.conservation import ProjectionError, Projector, constraint_matrix, project
from fastkinetic.grid import VelocityGrid
from oracles import moments_loop


def test_constraint_matrix_shape_and_inverse():
    vg = VelocityGrid(2, 8, 4.0)
    proj = Projector(vg)
    assert proj.C.shape == (4, 64)
    np.testing.assert_allclose(proj.C @ proj.P, np.eye(4), atol=1e-12)


def test_constraint_rows_match_brute_force_moments(rng):
    vg = VelocityGrid(3, 4, 2.0)
    f = rng.random(vg.shape)
    np.testing.assert_allclose(constraint_matrix(vg) @ f.ravel(), moments_loop(f, vg.axis, 3), rtol=1e-13)


def test_project_hits_target(rng):
    vg = VelocityGrid(2, 16, 6.0)
    proj = Projector(vg)
    ft = rng.random(vg.shape)
    target = np.array([1.0, 0.3, -0.1, 1.7])
    f = project(ft, target, proj)
    np.testing.assert_allclose(proj.moments(f), target, rtol=0, atol=1e-12)


def test_project_is_minimal(rng):
    vg = VelocityGrid(2, 16, 6.0)
    proj = Projector(vg)
    ft = rng.random(vg.size)
    target = np.array([1.0, 0.3, -0.1, 1.7])
    f = proj.project(ft, target)
    null = scipy.linalg.null_space(proj.C)
    best = np.linalg.norm(f - ft)
    for _ in range(20):
        g = f + null @ rng.normal(size=null.shape[1])
        assert np.allclose(proj.C @ g, target, atol=1e-10)
        assert best <= np.linalg.norm(g - ft)


def test_correction_lies_in_row_space(rng):
    vg = VelocityGrid(2, 16, 6.0)
    proj = Projector(vg)
    ft = rng.random(vg.size)
    f = proj.project(ft, [0.8, 0.0, 0.2, 1.1])
    w, *_ = np.linalg.lstsq(proj.C.T, f - ft, rcond=None)
    assert np.linalg.norm(proj.C.T @ w - (f - ft)) <= 1e-10


@given(st.sampled_from([(2, 8, 4.0), (2, 32, 9.0), (3, 8, 5.0)]), st.integers(0, 2**32 - 1))
def test_idempotent_and_linear(lat, seed):
    vg = VelocityGrid(*lat)
    proj = Projector(vg)
    r = np.random.default_rng(seed)
    f, g = r.random((2, vg.size))
    U, V = r.normal(size=(2, vg.dim + 2))
    pf = proj.project(f, U)
    np.testing.assert_allclose(proj.project(pf, U), pf, rtol=0, atol=1e-13 * np.abs(pf).max())
    a, b = 0.3, -2.0
    lin = proj.project(a * f + b * g, a * U + b * V)
    np.testing.assert_allclose(lin, a * pf + b * proj.project(g, V), atol=1e-12)


def test_zero_target_removes_moments(rng):
    vg = VelocityGrid(3, 16, 7.0)
    proj = Projector(vg)
    q = rng.normal(size=(5,) + vg.shape)
    out = proj.project(q, 0.0)
    assert out.shape == q.shape
    assert np.abs(proj.moments(out)).max() < 1e-12 * np.abs(proj.moments(q)).max()


def test_project_rejects_bad_input():
    vg = VelocityGrid(2, 8, 4.0)
    proj = Projector(vg)
    f = np.ones(vg.shape)
    f[0, 0] = np.nan
    with pytest.raises(ProjectionError):
        proj.project(f, 0.0)
    with pytest.raises(ProjectionError):
        proj.project(np.ones((3, 7)), 0.0)


def test_ill_conditioned_lattice_rejected():
    vg = VelocityGrid(2, 4, 1e4)
    with pytest.raises(ProjectionError):
        Projector(vg, max_condition=1e6)
