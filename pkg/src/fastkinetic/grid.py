"""Phase-space grids: truncated velocity lattice, Cartesian spatial mesh, solid boxes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# support radius of the distribution in the scaled box [-pi, pi]^dv
SUPPORT_FRACTION = 2.0 / (3.0 + np.sqrt(2.0))

BOUNDARY_KINDS = ("periodic", "inflow", "outflow", "dirichlet")


class GridError(ValueError):
    pass


class VelocityGrid:
    """Uniform cell-centred velocity lattice on [-L, L)^dv.

    Nodes sit at ``(i + 1/2 - N/2) * dv`` so the lattice is exactly symmetric
    under ``v -> -v``; the mirror index along an axis is ``N - 1 - i``.
    """

    def __init__(self, dim: int, n: int, bound: float):
        if dim not in (2, 3):
            raise GridError(f"velocity dimension must be 2 or 3, got {dim}")
        if n < 4 or n % 2:
            raise GridError(f"points per axis must be even and >= 4, got {n}")
        if not bound > 0:
            raise GridError(f"velocity bound must be positive, got {bound}")
        self.dim = int(dim)
        self.n = int(n)
        self.bound = float(bound)
        self.spacing = 2.0 * self.bound / self.n
        half = (np.arange(self.n // 2) + 0.5) * self.spacing
        # built from one half so that v -> -v is exact in floating point
        self.axis = np.concatenate([-half[::-1], half])
        self.axis.setflags(write=False)
        self.shape = (self.n,) * self.dim
        self.size = self.n**self.dim
        self.cell_volume = self.spacing**self.dim
        self.kappa = np.pi / self.bound

        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        self.points = np.stack([m.ravel() for m in mesh], axis=1)
        self.points.setflags(write=False)
        self.speed2 = np.sum(self.points**2, axis=1)
        self.speed2.setflags(write=False)

        idx = np.arange(self.size).reshape(self.shape)
        self._mirror = []
        for a in range(self.dim):
            m = np.flip(idx, axis=a).ravel().copy()
            m.setflags(write=False)
            self._mirror.append(m)

    def __repr__(self):
        return f"VelocityGrid(dim={self.dim}, n={self.n}, bound={self.bound})"

    @property
    def max_abs(self) -> float:
        """Largest per-axis speed, ``L - dv/2``."""
        return float(self.axis[-1])

    def lead_shape(self, shape) -> tuple:
        """Leading (cell) dimensions of an array laid out as ``(..., *shape)`` or ``(..., size)``."""
        shape = tuple(shape)
        if shape[len(shape) - self.dim :] == self.shape:
            return shape[: len(shape) - self.dim]
        if shape and shape[-1] == self.size:
            return shape[:-1]
        raise GridError(f"array of shape {shape} does not match the velocity lattice {self.shape}")

    def mirror_map(self, axis: int) -> np.ndarray:
        """Flat-index permutation negating the velocity component along ``axis``."""
        return self._mirror[axis]

    def mirror_index(self, k, axis: int):
        return self._mirror[axis][k]

    def check_support(self, f: np.ndarray, tol: float = 1e-8) -> float:
        """Warn when ``f`` carries mass outside the aliasing-free ball.

        Returns the relative mass found outside the ball of radius
        ``SUPPORT_FRACTION * L``.
        """
        f = np.asarray(f).reshape(-1, self.size)
        outside = self.speed2 > (SUPPORT_FRACTION * self.bound) ** 2
        total = np.abs(f).sum()
        if total == 0:
            return 0.0
        frac = float(np.abs(f[:, outside]).sum() / total)
        if frac > tol:
            warnings.warn(
                f"{frac:.2e} of the mass lies outside the spectral support ball; "
                "consider a larger velocity bound",
                stacklevel=2,
            )
        return frac


def build_velocity_grid(dim: int, n: int, bound: float) -> VelocityGrid:
    return VelocityGrid(dim, n, bound)


def mirror_velocity_index(vgrid: VelocityGrid, k, axis: int):
    """Index of the node whose velocity equals ``v_k`` with component ``axis`` negated."""
    return vgrid.mirror_index(k, axis)


@dataclass(frozen=True)
class SolidBox:
    """Axis-aligned block of solid cells, inclusive index ranges per axis."""

    ranges: tuple

    def __post_init__(self):
        object.__setattr__(self, "ranges", tuple((int(a), int(b)) for a, b in self.ranges))
        for lo, hi in self.ranges:
            if hi < lo:
                raise GridError(f"empty solid range ({lo}, {hi})")

    @classmethod
    def from_bounds(cls, grid: "SpatialGrid", bounds: Sequence[Sequence[float]]) -> "SolidBox":
        """Box of all cells whose centres fall inside the physical ``bounds``."""
        ranges = []
        for a, (lo, hi) in enumerate(bounds):
            c = grid.centers[a]
            eps = 1e-9 * grid.spacing
            inside = np.nonzero((c >= lo - eps) & (c <= hi + eps))[0]
            if inside.size == 0:
                raise GridError(f"solid bounds {lo, hi} contain no cell centre on axis {a}")
            ranges.append((inside[0], inside[-1]))
        return cls(tuple(ranges))

    def slices(self):
        return tuple(slice(lo, hi + 1) for lo, hi in self.ranges)


class SpatialGrid:
    """Uniform Cartesian mesh with equal spacing on every axis.

    ``dim == 0`` gives a single space-homogeneous cell with shape ``()``.
    ``boundaries`` holds one ``(low, high)`` pair of kinds per axis.
    """

    def __init__(self, dim, cells=(), bounds=(), solids=(), boundaries=None):
        if dim not in (0, 1, 2, 3):
            raise GridError(f"spatial dimension must be 0..3, got {dim}")
        self.dim = int(dim)
        cells = tuple(int(m) for m in np.broadcast_to(cells, (dim,))) if dim else ()
        if any(m < 1 for m in cells):
            raise GridError(f"need at least one cell per axis, got {cells}")
        self.shape = cells
        self.bounds = tuple((float(lo), float(hi)) for lo, hi in bounds) if dim else ()
        if len(self.bounds) != dim:
            raise GridError("one (lo, hi) pair of bounds per axis is required")

        if dim:
            steps = [(hi - lo) / m for (lo, hi), m in zip(self.bounds, cells)]
            if not np.allclose(steps, steps[0], rtol=1e-12, atol=0):
                raise GridError(f"cell size must be identical on every axis, got {steps}")
            self.spacing = float(steps[0])
            if not self.spacing > 0:
                raise GridError("domain bounds must be increasing")
        else:
            self.spacing = np.inf
        self.centers = tuple(
            lo + (np.arange(m) + 0.5) * self.spacing for (lo, _), m in zip(self.bounds, cells)
        )
        self.cell_volume = self.spacing**dim if dim else 1.0

        if boundaries is None:
            boundaries = [("periodic", "periodic")] * dim
        boundaries = tuple(tuple(b) for b in boundaries)
        if len(boundaries) != dim:
            raise GridError("one (low, high) boundary pair per axis is required")
        for pair in boundaries:
            for kind in pair:
                if kind not in BOUNDARY_KINDS:
                    raise GridError(f"unknown boundary kind {kind!r}")
            if ("periodic" in pair) and pair != ("periodic", "periodic"):
                raise GridError("periodic boundaries must be paired on both faces")
        self.boundaries = boundaries

        self.solids = tuple(solids)
        self.solid = np.zeros(self.shape, dtype=bool)
        for box in self.solids:
            if len(box.ranges) != dim:
                raise GridError("solid box dimension does not match the grid")
            for a, (lo, hi) in enumerate(box.ranges):
                if lo < 1 or hi > cells[a] - 2:
                    raise GridError(f"solid box {box.ranges} must lie strictly inside the domain")
                if boundaries[a][0] == "inflow" and lo <= 1:
                    raise GridError("solid box touches an inflow face")
                if boundaries[a][1] == "inflow" and hi >= cells[a] - 2:
                    raise GridError("solid box touches an inflow face")
            self.solid[box.slices()] = True
        self.fluid = ~self.solid
        self.n_fluid = int(self.fluid.sum()) if dim else 1

    def __repr__(self):
        return f"SpatialGrid(dim={self.dim}, cells={self.shape}, bounds={self.bounds})"

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.dim else 1

    @property
    def periodic(self) -> bool:
        return all(b == ("periodic", "periodic") for b in self.boundaries)


def build_spatial_grid(dim, cells=(), bounds=(), solids=(), boundaries=None) -> SpatialGrid:
    return SpatialGrid(dim, cells, bounds, solids, boundaries)
