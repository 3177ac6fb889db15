import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fastkinetic.bgk import BgkParams, BgkStabilityError, bgk_rhs, bgk_step
from fastkinetic.conservation import Projector
from fastkinetic.grid import VelocityGrid
from fastkinetic.macro import equilibrium_project

VG = VelocityGrid(2, 32, 9.0)
PROJ = Projector(VG)


def _bimodal(vg):
    pts = vg.points
    f = np.exp(-np.sum((pts - 1.0) ** 2, axis=1) / 0.4) + np.exp(-np.sum((pts + 1.0) ** 2, axis=1) / 0.4)
    return (f / f.sum() / vg.cell_volume).reshape(vg.shape)


def test_rhs_has_no_moments(rng):
    f = rng.random((3,) + VG.shape) + 0.1
    U = PROJ.moments(f)
    Q = bgk_rhs(f, U, BgkParams(), PROJ)
    assert np.abs(PROJ.moments(Q)).max() <= 1e-12 * np.abs(U).max()


@given(
    st.sampled_from(["density", "constant"]),
    st.sampled_from(["euler", "exponential"]),
    st.floats(0.01, 1.0),
    st.integers(0, 2**31),
)
def test_step_preserves_moments(freq, integ, dt, seed):
    f = np.random.default_rng(seed).random((2, VG.size)) + 0.05
    p = BgkParams(tau=1.0, frequency=freq, mu=0.8, integrator=integ)
    U = PROJ.moments(f)
    g = bgk_step(f, min(dt, 0.9 / max(p.nu(U).max(), 1e-9)), p, PROJ)
    assert np.abs(PROJ.moments(g) - U).max() <= 1e-12 * np.abs(U).max()


@pytest.mark.parametrize("integ", ["euler", "exponential"])
def test_homogeneous_relaxation_is_monotone(integ):
    f = _bimodal(VG)
    p = BgkParams(tau=1.0, frequency="density", integrator=integ)
    E = equilibrium_project(PROJ.moments(f), VG, PROJ)
    dist = []
    for _ in range(40):
        dist.append(np.linalg.norm(f - E))
        f = bgk_step(f, 0.1, p, PROJ)
    assert np.all(np.diff(dist) <= 0)
    assert dist[-1] < 0.05 * dist[0]


def test_exponential_integrator_is_exact_for_fixed_moments():
    f = _bimodal(VG)
    U = PROJ.moments(f)
    E = equilibrium_project(U, VG, PROJ)
    p = BgkParams(tau=0.5, frequency="constant", mu=2.0, integrator="exponential")
    g = f
    for _ in range(7):
        g = bgk_step(g, 0.03, p, PROJ)
    expected = E + (f - E) * np.exp(-2.0 * 7 * 0.03 / 0.5)
    np.testing.assert_allclose(g, expected, atol=1e-13)


def test_equilibrium_is_fixed_point():
    E = equilibrium_project(np.array([1.2, 0.3, -0.1, 1.5]), VG, PROJ)
    for integ in ("euler", "exponential"):
        g = bgk_step(E, 0.2, BgkParams(integrator=integ), PROJ)
        np.testing.assert_allclose(g, E, rtol=0, atol=1e-14)


def test_euler_stability_guard():
    f = _bimodal(VG)
    with pytest.raises(BgkStabilityError):
        bgk_step(f, 2.0, BgkParams(tau=1.0), PROJ)
    # the exact exponential form has no such limit
    bgk_step(f, 2.0, BgkParams(tau=1.0, integrator="exponential"), PROJ)


def test_parameter_validation():
    with pytest.raises(ValueError):
        BgkParams(tau=0.0)
    with pytest.raises(ValueError):
        BgkParams(frequency="other")
    with pytest.raises(ValueError):
        BgkParams(integrator="rk4")
    with pytest.raises(ValueError):
        BgkParams(frequency="constant", mu=0.0)


def test_layouts_agree(rng):
    f = (rng.random((4,) + VG.shape) + 0.1) / 300.0
    p = BgkParams(tau=0.7)
    a = bgk_step(f, 0.1, p, PROJ)
    b = bgk_step(f.reshape(4, -1), 0.1, p, PROJ)
    np.testing.assert_array_equal(a.reshape(4, -1), b)
