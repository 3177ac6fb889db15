"""Moments, primitive variables and the discrete Maxwellian.

Conserved vectors are stored as arrays ``U[..., :]`` with layout
``(rho, rho*u_1, ..., rho*u_dv, E)`` where ``E = 1/2 sum |v|^2 f dv^d`` so that
``dv/2 * rho * T = E - rho |u|^2 / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conservation import Projector
from .grid import VelocityGrid


class DegenerateStateError(ArithmeticError):
    """A cell has non-positive density or temperature."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


@dataclass
class MacroState:
    """Primitive description of one (or an array of) local states."""

    rho: np.ndarray
    u: np.ndarray
    T: np.ndarray

    @classmethod
    def from_conserved(cls, U, dim: int, check: bool = True) -> "MacroState":
        U = np.asarray(U, dtype=float)
        rho = U[..., 0]
        if check and np.any(~(rho > 0)):
            bad = np.argwhere(~(np.atleast_1d(rho) > 0))[0]
            raise DegenerateStateError(f"non-positive density in cell {tuple(bad)}", tuple(bad))
        with np.errstate(divide="ignore", invalid="ignore"):
            u = U[..., 1 : 1 + dim] / rho[..., None]
            T = 2.0 * (U[..., -1] - 0.5 * rho * np.sum(u**2, axis=-1)) / (dim * rho)
        return cls(rho, u, T)

    def conserved(self) -> np.ndarray:
        rho = np.asarray(self.rho, dtype=float)
        u = np.asarray(self.u, dtype=float)
        T = np.asarray(self.T, dtype=float)
        dim = u.shape[-1]
        E = 0.5 * rho * np.sum(u**2, axis=-1) + 0.5 * dim * rho * T
        return np.concatenate([rho[..., None], rho[..., None] * u, E[..., None]], axis=-1)


def compute_moments(f: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Discrete moments ``sum_k phi_k f_k dv^d`` of ``f`` shaped ``(..., *vshape)`` or ``(..., Nv)``."""
    f = np.asarray(f, dtype=float)
    lead = vgrid.lead_shape(f.shape)
    flat = f.reshape(-1, vgrid.size)
    w = vgrid.cell_volume
    rho = flat.sum(axis=1) * w
    mom = (flat @ vgrid.points) * w
    E = 0.5 * (flat @ vgrid.speed2) * w
    U = np.concatenate([rho[:, None], mom, E[:, None]], axis=1)
    return U.reshape(lead + (vgrid.dim + 2,))


def heat_flux(f: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """``q = 1/2 sum (v - u) |v - u|^2 f dv^d`` per cell."""
    f = np.asarray(f, dtype=float)
    lead = vgrid.lead_shape(f.shape)
    flat = f.reshape(-1, vgrid.size)
    U = compute_moments(flat, vgrid)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = U[:, 1:-1] / U[:, :1]
    c = vgrid.points[None, :, :] - u[:, None, :]
    c2 = np.sum(c**2, axis=-1)
    q = 0.5 * np.einsum("bk,bka->ba", flat * c2, c) * vgrid.cell_volume
    return q.reshape(lead + (vgrid.dim,))


def maxwellian(rho, u, T, vgrid: VelocityGrid) -> np.ndarray:
    """Pointwise Maxwellian at every lattice node, shape ``(..., *vshape)``."""
    rho = np.asarray(rho, dtype=float)
    T = np.asarray(T, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(~(T > 0)):
        raise DegenerateStateError("Maxwellian requested with non-positive temperature")
    lead = np.broadcast_shapes(rho.shape, T.shape, u.shape[:-1])
    rho = np.broadcast_to(rho, lead).reshape(-1, 1)
    T = np.broadcast_to(T, lead).reshape(-1, 1)
    u = np.broadcast_to(u, lead + (vgrid.dim,)).reshape(-1, 1, vgrid.dim)
    r2 = np.sum((vgrid.points[None] - u) ** 2, axis=-1)
    M = rho / (2.0 * np.pi * T) ** (vgrid.dim / 2) * np.exp(-r2 / (2.0 * T))
    return M.reshape(lead + vgrid.shape)


def maxwellian_pointwise(U, vgrid: VelocityGrid) -> np.ndarray:
    st = MacroState.from_conserved(U, vgrid.dim)
    return maxwellian(st.rho, st.u, st.T, vgrid)


def equilibrium_project(U, vgrid: VelocityGrid, proj: Projector) -> np.ndarray:
    """Maxwellian of ``U`` corrected so that its discrete moments equal ``U``."""
    U = np.asarray(U, dtype=float)
    return proj.project(maxwellian_pointwise(U, vgrid), U)
