"""BGK relaxation towards the moment-matched discrete Maxwellian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conservation import Projector
from .macro import equilibrium_project

FREQUENCY_RULES = ("density", "constant")
INTEGRATORS = ("euler", "exponential")


class BgkStabilityError(ValueError):
    pass


@dataclass(frozen=True)
class BgkParams:
    """Collision frequency rule, relaxation scale and time integrator.

    ``frequency="density"`` uses ``nu = rho``; ``"constant"`` uses ``nu = mu``.
    """

    tau: float = 1.0
    frequency: str = "density"
    mu: float = 1.0
    integrator: str = "euler"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("BGK relaxation scale must be positive")
        if self.frequency not in FREQUENCY_RULES:
            raise ValueError(f"unknown collision frequency rule {self.frequency!r}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown BGK integrator {self.integrator!r}")
        if self.frequency == "constant" and not self.mu > 0:
            raise ValueError("constant collision frequency must be positive")

    def nu(self, U) -> np.ndarray:
        rho = np.asarray(U, dtype=float)[..., 0]
        return rho if self.frequency == "density" else np.full(rho.shape, self.mu)


def _expand(a, ndim_v):
    return np.asarray(a)[(...,) + (None,) * ndim_v]


def _velocity_axes(f, proj):
    return f.ndim - len(proj.vgrid.lead_shape(f.shape))


def bgk_rhs(f, U, params: BgkParams, proj: Projector) -> np.ndarray:
    """``nu (E[U] - f) / tau`` with the projected Maxwellian ``E[U]``."""
    f = np.asarray(f, dtype=float)
    eq = equilibrium_project(U, proj.vgrid, proj).reshape(f.shape)
    return _expand(params.nu(U), _velocity_axes(f, proj)) * (eq - f) / params.tau


def bgk_step(f, dt, params: BgkParams, proj: Projector, U=None) -> np.ndarray:
    """One collision update; ``U`` defaults to the moments of ``f``."""
    f = np.asarray(f, dtype=float)
    d = _velocity_axes(f, proj)
    if U is None:
        U = proj.moments(f)
    rate = params.nu(U) * dt / params.tau
    eq = equilibrium_project(U, proj.vgrid, proj).reshape(f.shape)
    if params.integrator == "euler":
        if np.any(rate > 1.0 + 1e-12):
            raise BgkStabilityError(f"nu*dt/tau = {np.max(rate):.4g} exceeds 1")
        return f + _expand(rate, d) * (eq - f)
    return eq + (f - eq) * _expand(np.exp(-rate), d)
