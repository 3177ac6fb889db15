"""Exact shift transport of piecewise-constant distributions.

Each velocity node ``k`` carries one "particle" per spatial cell; all particles
of a node travel together, so their positions are described by a single
displacement vector ``d[k]``.  The value seen at cell centre ``x_j`` is the
mass of the particle whose support covers ``x_j``, which sits at the integer
offset ``s_k = floor(1/2 - d[k] / dx)`` from ``j`` on every axis.

Two bookkeeping modes are used per axis:

* cumulative: periodic axes of a grid without solids keep the total
  displacement, and sampling/deposit are the gather/scatter by ``s_k``.  A
  field whose displacements are whole multiples of the domain length is
  returned bit for bit.
* re-anchored: every other axis relabels particles to the cell they cover at
  the end of each step, keeping only the fractional remainder of ``d``.  This
  is where boundary fills and wall reflection are applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .conservation import Projector
from .grid import SpatialGrid, VelocityGrid
from .macro import MacroState, equilibrium_project


class TransportError(ValueError):
    pass


@dataclass
class DistributionState:
    """Particle masses ``m`` with shape ``(*cells, Nv)`` and displacements ``d`` with shape ``(Nv, dx)``."""

    m: np.ndarray
    d: np.ndarray
    t: float = 0.0
    inflow: np.ndarray | None = None  # net conserved quantities entered through faces

    def copy(self) -> "DistributionState":
        inflow = None if self.inflow is None else self.inflow.copy()
        return DistributionState(self.m.copy(), self.d.copy(), self.t, inflow)


@dataclass
class BoundarySchedule:
    """Time-dependent macroscopic state on inflow faces.

    ``faces`` maps ``(axis, side)`` with ``side`` 0 (low) or 1 (high) to a
    callable returning either a :class:`MacroState` or a conserved vector.
    """

    faces: dict = field(default_factory=dict)

    def state(self, axis: int, side: int, t: float):
        try:
            fn: Callable = self.faces[(axis, side)]
        except KeyError:
            raise TransportError(f"no inflow state scheduled for face {(axis, side)}") from None
        st = fn(t)
        if isinstance(st, MacroState):
            return st.conserved()
        return np.asarray(st, dtype=float)

    @classmethod
    def constant(cls, faces, state) -> "BoundarySchedule":
        return cls({face: (lambda t, s=state: s) for face in faces})


def source_shift(d, dx: float) -> np.ndarray:
    """Integer offset of the cell holding the particle seen at each centre."""
    return np.floor(0.5 - np.asarray(d, dtype=float) / dx).astype(np.int64)


def advance(state: DistributionState, dt: float, velocities: np.ndarray) -> DistributionState:
    """Move every particle by ``v_k dt``; masses are untouched."""
    state.d += velocities * dt
    state.t += dt
    return state


def _index_shape(ndim_cells, axis, n_cells, nv):
    shape = [1] * (ndim_cells + 1)
    shape[axis] = n_cells
    shape[-1] = nv
    return shape


def shifted_gather(m, s, axis, periodic=True):
    """``out[..., j, ..., k] = m[..., j + s_k, ..., k]`` along ``axis``.

    Non-periodic sources are clamped; the returned masks flag sources that
    fell below or above the domain.
    """
    n_cells = m.shape[axis]
    nv = m.shape[-1]
    src = np.arange(n_cells)[:, None] + s[None, :]
    if periodic:
        idx = np.mod(src, n_cells)
        low = high = None
    else:
        idx = np.clip(src, 0, n_cells - 1)
        low, high = src < 0, src >= n_cells
    shape = _index_shape(m.ndim - 1, axis, n_cells, nv)
    out = np.take_along_axis(m, idx.reshape(shape), axis=axis)
    if low is not None:
        low, high = low.reshape(shape), high.reshape(shape)
    return out, low, high


def apply_solid_reflection(new, old, s, axis, solid, mirror):
    """Specular reflection for particles whose source cell is solid.

    For a fluid cell ``j`` and node ``k`` with ``j + s_k`` inside a solid, the
    incoming particle is the one at ``j`` with the wall-normal velocity
    reversed, ``new[j, k] = old[j, mirror[k]]``.  Solid cells are emptied.
    ``solid`` is the cell mask matching the leading axes of ``new``.
    """
    if not solid.any():
        return new
    n_cells = solid.shape[axis]
    for sv in np.unique(s):
        if sv == 0:
            continue
        if abs(sv) >= n_cells:
            raise TransportError("shift larger than the domain")
        ks = np.nonzero(s == sv)[0]
        shifted = np.zeros_like(solid)
        dst = [slice(None)] * solid.ndim
        src = [slice(None)] * solid.ndim
        if sv > 0:
            dst[axis], src[axis] = slice(0, n_cells - sv), slice(sv, None)
        else:
            dst[axis], src[axis] = slice(-sv, None), slice(0, n_cells + sv)
        shifted[tuple(dst)] = solid[tuple(src)]
        cells = np.nonzero(shifted & ~solid)
        if not cells[0].size:
            continue
        rows = new[cells]
        rows[:, ks] = old[cells][:, mirror[ks]]
        new[cells] = rows
    new[solid] = 0.0
    return new


class Transport:
    """Transport operator bound to one phase-space grid.

    ``initial`` supplies the frozen ghost values of Dirichlet faces.
    """

    def __init__(
        self,
        grid: SpatialGrid,
        vgrid: VelocityGrid,
        proj: Projector,
        schedule: BoundarySchedule | None = None,
        initial: np.ndarray | None = None,
    ):
        if grid.dim > vgrid.dim:
            raise TransportError("spatial dimension exceeds velocity dimension")
        self.grid = grid
        self.vgrid = vgrid
        self.proj = proj
        self.schedule = schedule or BoundarySchedule()
        self.velocities = np.ascontiguousarray(vgrid.points[:, : grid.dim])
        has_solids = bool(grid.solid.any()) if grid.dim else False
        self.cumulative = tuple(
            grid.boundaries[a] == ("periodic", "periodic") and not has_solids for a in range(grid.dim)
        )
        self._frozen = {}
        for a, pair in enumerate(grid.boundaries):
            for side, kind in enumerate(pair):
                if kind == "dirichlet":
                    if initial is None:
                        raise TransportError("Dirichlet faces need the initial state")
                    idx = [slice(None)] * grid.dim
                    idx[a] = slice(0, 1) if side == 0 else slice(-1, None)
                    self._frozen[(a, side)] = np.array(initial[tuple(idx)])
                if kind == "inflow":
                    self.schedule.state(a, side, 0.0)  # fail early on a missing face

    def new_state(self, m) -> DistributionState:
        m = np.array(m, dtype=float).reshape(self.grid.shape + (self.vgrid.size,))
        if self.grid.dim:
            m[self.grid.solid] = 0.0
        return DistributionState(
            m, np.zeros((self.vgrid.size, self.grid.dim)), 0.0, np.zeros(self.vgrid.dim + 2)
        )

    def _face_totals(self, arr, mask):
        """Conserved totals of the entries of ``arr`` selected by ``mask``."""
        per_node = np.where(mask, arr, 0.0).reshape(-1, arr.shape[-1]).sum(axis=0)
        return self.grid.cell_volume * (per_node @ self.proj.C.T)

    def ghost(self, axis, side, t):
        kind = self.grid.boundaries[axis][side]
        if kind == "inflow":
            U = self.schedule.state(axis, side, t)
            return equilibrium_project(U, self.vgrid, self.proj).reshape(self.vgrid.size)
        if kind == "dirichlet":
            return self._frozen[(axis, side)]
        return None

    def advance(self, state: DistributionState, dt: float) -> DistributionState:
        advance(state, dt, self.velocities)
        for a, cum in enumerate(self.cumulative):
            length = self.grid.bounds[a][1] - self.grid.bounds[a][0]
            if cum and np.abs(state.d[:, a]).max() > length:
                # exact floating remainder: keeps s_k congruent modulo the cell count
                state.d[:, a] = np.fmod(state.d[:, a], length)
        return state

    def _slabs(self, axis, m, budget=2**28):
        """Index blocks along another cell axis; shifts along ``axis`` are independent between them."""
        dim = self.grid.dim
        if dim < 2:
            yield (slice(None),) * dim
            return
        other = 0 if axis != 0 else 1
        per_index = m.nbytes // m.shape[other]
        step = max(1, budget // max(per_index, 1))
        for lo in range(0, m.shape[other], step):
            sl = [slice(None)] * dim
            sl[other] = slice(lo, lo + step)
            yield tuple(sl)

    def reanchor(self, state: DistributionState) -> DistributionState:
        """Relabel particles on non-cumulative axes to the cells they now cover.

        Works block by block, in place, so peak memory stays near one copy of
        a block rather than of the whole distribution.
        """
        dx = self.grid.spacing
        has_solids = self.grid.dim and self.grid.solid.any()
        for a, cum in enumerate(self.cumulative):
            if cum:
                continue
            s = source_shift(state.d[:, a], dx)
            if has_solids and np.abs(s).max() > 1:
                raise TransportError("wall reflection needs |v| dt <= dx")
            if not s.any():
                continue
            periodic = self.grid.boundaries[a] == ("periodic", "periodic")
            ghosts = [None, None] if periodic else [self.ghost(a, side, state.t) for side in (0, 1)]
            n_cells = state.m.shape[a]
            dest = np.arange(n_cells)[:, None] - s[None, :]
            leaving = (dest < 0) | (dest >= n_cells)
            mirror = self.vgrid.mirror_map(a)
            for sl in self._slabs(a, state.m):
                block = state.m[sl]
                new, low, high = shifted_gather(block, s, a, periodic=periodic)
                if not periodic:
                    for g, mask in zip(ghosts, (low, high)):
                        if g is not None and mask.any():
                            g = g[sl] if g.ndim > 1 else g
                            np.copyto(new, np.broadcast_to(g, new.shape), where=mask)
                    if state.inflow is not None:
                        state.inflow += self._face_totals(new, low | high)
                        state.inflow -= self._face_totals(block, leaving.reshape(low.shape))
                if has_solids:
                    apply_solid_reflection(new, block, s, a, self.grid.solid[sl], mirror)
                state.m[sl] = new
                del new, block
            state.d[:, a] += s * dx
        return state

    def sample(self, state: DistributionState) -> np.ndarray:
        """Distribution seen at cell centres, shape ``(*cells, Nv)``.

        Returns ``state.m`` itself (no copy) when every axis is re-anchored.
        """
        f = state.m
        for a, cum in enumerate(self.cumulative):
            if cum:
                s = source_shift(state.d[:, a], self.grid.spacing)
                if s.any():
                    f, _, _ = shifted_gather(f, s, a, periodic=True)
        return f

    def deposit(self, state: DistributionState, df: np.ndarray) -> DistributionState:
        """Add a cell-centred increment back onto the particles that produced the samples."""
        for a in reversed(range(self.grid.dim)):
            if self.cumulative[a]:
                s = source_shift(state.d[:, a], self.grid.spacing)
                if s.any():
                    df, _, _ = shifted_gather(df, -s, a, periodic=True)
        state.m += df
        return state

    def shifts(self, state: DistributionState) -> np.ndarray:
        return source_shift(state.d, self.grid.spacing)


def sample_at_centers(state: DistributionState, transport: Transport) -> np.ndarray:
    return transport.sample(state)


def deposit(state: DistributionState, df, transport: Transport) -> DistributionState:
    return transport.deposit(state, df)
