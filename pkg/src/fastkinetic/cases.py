"""Benchmark problems: initial data, exact solutions and boundary schedules.

Every case is described by a :class:`CaseConfig`; :func:`build_solver` turns
one into a ready-to-run :class:`~fastkinetic.solver.Solver`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .bgk import BgkParams
from .conservation import Projector
from .grid import SolidBox, SpatialGrid, VelocityGrid
from .macro import MacroState, equilibrium_project, maxwellian
from .solver import Model, Solver
from .spectral import SpectralConfig
from .transport import BoundarySchedule

CASE_IDS = ("bkw2d", "relax3d", "sod2v", "sod3v", "vortex2d", "reentry2d", "reentry3d", "custom")

# two-Gaussian relaxation data
SIGMA2 = 0.2
V1 = (-1.0, -1.0, -0.25)

# inflow turn of the 2D re-entry problem
T1 = 1.5
T2 = 3.0 * math.sqrt(2.0) / 2.0 + T1

REENTRY2D_BOXES = (
    ((1.5, 1.7), (1.7, 1.95)),
    ((1.5, 1.7), (2.05, 2.3)),
    ((1.8, 2.0), ((1.7 + 2.05) / 2, (1.95 + 2.3) / 2)),
)
REENTRY3D_BOX = ((0.8, 1.2), (0.7, 1.3), (0.7, 1.3))


@dataclass
class CaseConfig:
    """Complete description of one run.

    Spatial fields are ignored when ``space_dim == 0`` (space-homogeneous).
    ``solids`` holds physical ``(lo, hi)`` bounds per axis for each box.
    """

    case: str = "custom"
    space_dim: int = 0
    cells: tuple = ()
    domain: tuple = ()
    boundaries: tuple | None = None
    solids: tuple = ()
    velocity_dim: int = 2
    n: int = 32
    bound: float = 8.0
    model: str = "boltzmann"
    tau: float = 1.0
    kernel: str = ""
    kernel_constant: float | None = None
    angles: tuple = ()
    transverse: str = "bessel"
    bgk_frequency: str = "density"
    bgk_mu: float | None = None
    bgk_integrator: str = "euler"
    t_final: float = 1.0
    dt: float | None = None
    cfl: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in CASE_IDS:
            raise ValueError(f"unknown case {self.case!r}; choose from {', '.join(CASE_IDS)}")
        if self.n % 2:
            raise ValueError(f"velocity points per axis must be even, got {self.n}")
        if self.model not in ("boltzmann", "bgk", "euler"):
            raise ValueError(f"unknown model {self.model!r}")
        kernel = self.kernel or ("maxwell" if self.velocity_dim == 2 else "hard_sphere")
        if self.model == "boltzmann" and (self.velocity_dim, kernel) not in ((2, "maxwell"), (3, "hard_sphere")):
            raise ValueError(
                f"Boltzmann kernel {kernel!r} is unsupported in dv={self.velocity_dim} "
                "(Maxwell molecules need dv=2, hard spheres dv=3)"
            )
        self.kernel = kernel
        if self.model != "euler" and not self.tau > 0:
            raise ValueError("tau must be positive unless model = euler")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.space_dim and (len(self.cells) != self.space_dim or len(self.domain) != self.space_dim):
            raise ValueError("cells and domain need one entry per spatial axis")

    def replace(self, **kw) -> "CaseConfig":
        return dataclasses.replace(self, **kw)

    # grid/model factories -------------------------------------------------
    def velocity_grid(self) -> VelocityGrid:
        return VelocityGrid(self.velocity_dim, self.n, self.bound)

    def spatial_grid(self) -> SpatialGrid:
        if not self.space_dim:
            return SpatialGrid(0)
        grid = SpatialGrid(self.space_dim, self.cells, self.domain, boundaries=self.boundaries)
        if not self.solids:
            return grid
        boxes = [SolidBox.from_bounds(grid, b) for b in self.solids]
        return SpatialGrid(self.space_dim, self.cells, self.domain, boxes, self.boundaries)

    def spectral_config(self) -> SpectralConfig:
        return SpectralConfig(
            dim=self.velocity_dim,
            n=self.n,
            bound=self.bound,
            angles=self.angles,
            kernel=self.kernel,
            kernel_constant=self.kernel_constant,
            tau=self.tau,
            transverse=self.transverse,
        )

    def build_model(self) -> Model:
        if self.model == "boltzmann":
            return Model.boltzmann(self.spectral_config())
        if self.model == "bgk":
            mu = self.bgk_mu
            if self.bgk_frequency == "constant" and mu is None:
                # same collision-frequency bound as the hard-sphere operator
                mu = self.spectral_config().loss_bound
            return Model.bgk_model(
                BgkParams(self.tau, self.bgk_frequency, mu if mu is not None else 1.0, self.bgk_integrator)
            )
        return Model.euler()


# space-homogeneous data -----------------------------------------------------


def bkw_s(t):
    return 1.0 - 0.5 * np.exp(-np.asarray(t, dtype=float) / 8.0)


def exact_bkw(v, t):
    """Self-similar solution for 2D Maxwell molecules; ``v`` has shape ``(..., 2)``."""
    v2 = np.sum(np.asarray(v, dtype=float) ** 2, axis=-1)
    S = bkw_s(t)
    return np.exp(-v2 / (2 * S)) / (2 * np.pi * S**2) * (2 * S - 1 + (1 - S) * v2 / (2 * S))


def init_bkw(vgrid: VelocityGrid, proj: Projector | None = None) -> np.ndarray:
    """``|v|^2 / pi * exp(-|v|^2)`` with mass 1, zero momentum and energy 1."""
    if vgrid.dim != 2:
        raise ValueError("BKW data are two-dimensional")
    proj = proj or Projector(vgrid)
    f = exact_bkw(vgrid.points, 0.0).reshape(vgrid.shape)
    return proj.project(f, np.array([1.0, 0.0, 0.0, 1.0]))


def two_gaussians(vgrid: VelocityGrid, sigma2=SIGMA2, v1=V1) -> np.ndarray:
    v1 = np.asarray(v1, dtype=float)
    g = maxwellian(0.5, v1, sigma2, vgrid) + maxwellian(0.5, -v1, sigma2, vgrid)
    return g


def two_gaussians_state(sigma2=SIGMA2, v1=V1) -> np.ndarray:
    """Exact conserved vector of the two-Gaussian mixture."""
    v1 = np.asarray(v1, dtype=float)
    return np.array([1.0, 0.0, 0.0, 0.0, 0.5 * (3 * sigma2 + v1 @ v1)])


def init_two_gaussians(vgrid: VelocityGrid, proj: Projector | None = None, sigma2=SIGMA2, v1=V1) -> np.ndarray:
    if vgrid.dim != 3:
        raise ValueError("the two-Gaussian problem is three-dimensional")
    proj = proj or Projector(vgrid)
    return proj.project(two_gaussians(vgrid, sigma2, v1), two_gaussians_state(sigma2, v1))


# space-dependent data -------------------------------------------------------


def _cell_centres(grid: SpatialGrid):
    return np.meshgrid(*grid.centers, indexing="ij")


def _equilibrium_field(st: MacroState, grid, vgrid, proj):
    f = equilibrium_project(st.conserved(), vgrid, proj)
    if grid.dim and grid.solid.any():
        f[grid.solid] = 0.0
    return f


def sod_state(grid: SpatialGrid, dim_v: int) -> MacroState:
    x = grid.centers[0]
    mid = 0.5 * (grid.bounds[0][0] + grid.bounds[0][1])
    left = x <= mid
    rho = np.where(left, 1.0, 0.125)
    T = np.where(left, 2.5, 0.25)
    return MacroState(rho, np.zeros(x.shape + (dim_v,)), T)


def init_sod(grid: SpatialGrid, vgrid: VelocityGrid, proj: Projector | None = None) -> np.ndarray:
    """Local equilibrium Riemann data, shape ``(M, *vshape)``."""
    proj = proj or Projector(vgrid)
    return _equilibrium_field(sod_state(grid, vgrid.dim), grid, vgrid, proj)


def vortex_state(grid: SpatialGrid, beta=5.0, gamma=2.0, centre=(5.0, 5.0), free=(1.0, (1.0, 1.0), 1.0)) -> MacroState:
    """Isentropic vortex on a uniform stream; density follows ``(T / T_inf)^(1/(gamma-1))``."""
    X, Y = _cell_centres(grid)
    xp, yp = X - centre[0], Y - centre[1]
    r2 = xp**2 + yp**2
    amp = beta / (2 * np.pi) * np.exp(0.5 * (1 - r2))
    rho_inf, u_inf, T_inf = free
    u = np.stack([u_inf[0] - yp * amp, u_inf[1] + xp * amp], axis=-1)
    T = T_inf - (gamma - 1) * beta / (8 * gamma * np.pi**2) * np.exp(1 - r2)
    rho = rho_inf * (T / T_inf) ** (1.0 / (gamma - 1))
    return MacroState(rho, u, T)


def init_vortex(grid: SpatialGrid, vgrid: VelocityGrid, proj: Projector | None = None, beta=5.0, gamma=2.0):
    proj = proj or Projector(vgrid)
    return _equilibrium_field(vortex_state(grid, beta, gamma), grid, vgrid, proj)


def reentry2d_velocity(t: float) -> np.ndarray:
    """Inflow velocity turning from (3, 0) to 45 degrees at constant speed 3."""
    if t < 0:
        raise ValueError("inflow schedule is defined for t >= 0")
    if t <= T1:
        return np.array([3.0, 0.0])
    if t <= T2:
        g = t - T1
        return np.array([math.sqrt(max(9.0 - g * g, 0.0)), g])
    c = 3.0 * math.sqrt(2.0) / 2.0
    return np.array([c, c])


def reentry2d_schedule(t: float) -> MacroState:
    return MacroState(np.array(1.0), reentry2d_velocity(t), np.array(1.0))


def init_reentry2d(grid: SpatialGrid, vgrid: VelocityGrid, proj: Projector | None = None):
    proj = proj or Projector(vgrid)
    st = MacroState(np.ones(grid.shape), np.broadcast_to([3.0, 0.0], grid.shape + (2,)), np.ones(grid.shape))
    return _equilibrium_field(st, grid, vgrid, proj)


REENTRY3D_STATE = MacroState(np.array(1.0), np.array([2.0, 0.0, 0.0]), np.array(1.0))


def init_reentry3d(grid: SpatialGrid, vgrid: VelocityGrid, proj: Projector | None = None):
    proj = proj or Projector(vgrid)
    s = REENTRY3D_STATE
    st = MacroState(np.full(grid.shape, 1.0), np.broadcast_to(s.u, grid.shape + (3,)), np.full(grid.shape, 1.0))
    return _equilibrium_field(st, grid, vgrid, proj)


# case registry ------------------------------------------------------------


def _west_inflow(dim):
    return (("inflow", "outflow"),) + (("outflow", "outflow"),) * (dim - 1)


def default_config(case: str) -> CaseConfig:
    """Reference parameters of each benchmark."""
    if case == "bkw2d":
        return CaseConfig(case, velocity_dim=2, n=32, bound=9.0, model="boltzmann", angles=(8,), t_final=10.0, dt=0.02)
    if case == "relax3d":
        return CaseConfig(case, velocity_dim=3, n=32, bound=7.0, model="boltzmann", angles=(8, 8), t_final=2.0, dt=0.05)
    if case == "sod2v":
        return CaseConfig(
            case, 1, (100,), ((0.0, 2.0),), (("dirichlet", "dirichlet"),),
            velocity_dim=2, n=64, bound=15.0, model="boltzmann", tau=1e-3, angles=(8,), t_final=0.15,
        )
    if case == "sod3v":
        return CaseConfig(
            case, 1, (100,), ((0.0, 2.0),), (("dirichlet", "dirichlet"),),
            velocity_dim=3, n=16, bound=15.0, model="boltzmann", tau=1e-3, angles=(8, 8), t_final=0.15,
        )
    if case == "vortex2d":
        return CaseConfig(
            case, 2, (100, 100), ((0.0, 10.0), (0.0, 10.0)), None,
            velocity_dim=2, n=32, bound=7.5, model="boltzmann", tau=0.1, angles=(8,), t_final=10.0,
            params={"beta": 5.0, "gamma": 2.0},
        )
    if case == "reentry2d":
        return CaseConfig(
            case, 2, (200, 200), ((0.0, 4.0), (0.0, 4.0)), _west_inflow(2), REENTRY2D_BOXES,
            velocity_dim=2, n=32, bound=10.0, model="boltzmann", tau=1e-2, angles=(8,), t_final=10.0,
        )
    if case == "reentry3d":
        return CaseConfig(
            case, 3, (45, 45, 45), ((0.0, 2.0),) * 3, _west_inflow(3), (REENTRY3D_BOX,),
            velocity_dim=3, n=16, bound=10.0, model="boltzmann", tau=0.3, angles=(8, 8), t_final=0.6,
            bgk_frequency="constant",
        )
    if case == "custom":
        return CaseConfig()
    raise ValueError(f"unknown case {case!r}; choose from {', '.join(CASE_IDS)}")


def initial_data(cfg: CaseConfig, grid: SpatialGrid, vgrid: VelocityGrid, proj: Projector) -> np.ndarray:
    case = cfg.case
    if case == "bkw2d":
        return init_bkw(vgrid, proj)
    if case == "relax3d":
        return init_two_gaussians(vgrid, proj, cfg.params.get("sigma2", SIGMA2), cfg.params.get("v1", V1))
    if case in ("sod2v", "sod3v"):
        return init_sod(grid, vgrid, proj)
    if case == "vortex2d":
        return init_vortex(grid, vgrid, proj, cfg.params.get("beta", 5.0), cfg.params.get("gamma", 2.0))
    if case == "reentry2d":
        return init_reentry2d(grid, vgrid, proj)
    if case == "reentry3d":
        return init_reentry3d(grid, vgrid, proj)
    # custom: uniform equilibrium from params (rho, u, T)
    rho = cfg.params.get("rho", 1.0)
    u = np.asarray(cfg.params.get("u", (0.0,) * cfg.velocity_dim), dtype=float)
    T = cfg.params.get("T", 1.0)
    st = MacroState(np.full(grid.shape, rho), np.broadcast_to(u, grid.shape + (cfg.velocity_dim,)), np.full(grid.shape, T))
    return _equilibrium_field(st, grid, vgrid, proj)


def boundary_schedule(cfg: CaseConfig) -> BoundarySchedule:
    if cfg.case == "reentry2d":
        return BoundarySchedule({(0, 0): reentry2d_schedule})
    if cfg.case == "reentry3d":
        return BoundarySchedule.constant([(0, 0)], REENTRY3D_STATE)
    faces = {}
    if cfg.boundaries:
        st = MacroState(
            np.array(cfg.params.get("rho", 1.0)),
            np.asarray(cfg.params.get("u", (0.0,) * cfg.velocity_dim), dtype=float),
            np.array(cfg.params.get("T", 1.0)),
        )
        for a, pair in enumerate(cfg.boundaries):
            for side, kind in enumerate(pair):
                if kind == "inflow":
                    faces[(a, side)] = lambda t, s=st: s
    return BoundarySchedule(faces)


def build_solver(cfg: CaseConfig, workers: int = 1) -> Solver:
    vgrid = cfg.velocity_grid()
    grid = cfg.spatial_grid()
    proj = Projector(vgrid)
    f0 = initial_data(cfg, grid, vgrid, proj)
    return Solver(grid, vgrid, cfg.build_model(), f0, boundary_schedule(cfg), workers=workers, cfl=cfg.cfl)
