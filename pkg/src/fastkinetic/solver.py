"""Splitting driver: exact transport followed by a local collision update."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bgk import BgkParams, BgkStabilityError, bgk_step
from .conservation import ProjectionError, Projector
from .grid import SpatialGrid, VelocityGrid
from .macro import DegenerateStateError, equilibrium_project
from .spectral import SpectralConfig, evaluate_q_fast, precompute_tables
from .transport import BoundarySchedule, DistributionState, Transport

EXIT_OK = 0
EXIT_INSTABILITY = 2
EXIT_CONFIG = 3

MODEL_KINDS = ("boltzmann", "bgk", "euler")


class InstabilityError(RuntimeError):
    """Non-finite values or non-positive density appeared during a step."""


@dataclass(frozen=True)
class Model:
    """Collision model: spectral Boltzmann, BGK, or instantaneous equilibrium."""

    kind: str
    spectral: SpectralConfig | None = None
    bgk: BgkParams | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model {self.kind!r}")
        if self.kind == "boltzmann" and self.spectral is None:
            raise ValueError("Boltzmann model needs a SpectralConfig")
        if self.kind == "bgk" and self.bgk is None:
            raise ValueError("BGK model needs BgkParams")

    @classmethod
    def boltzmann(cls, cfg: SpectralConfig) -> "Model":
        return cls("boltzmann", spectral=cfg)

    @classmethod
    def bgk_model(cls, params: BgkParams) -> "Model":
        return cls("bgk", bgk=params)

    @classmethod
    def euler(cls) -> "Model":
        return cls("euler")


def compute_dt(grid: SpatialGrid, vgrid: VelocityGrid, model: Model, U=None, cfl: float = 1.0) -> float:
    """Largest stable step: transport CFL and the collision positivity bound.

    The transport bound uses the largest per-axis speed since shifts are
    applied axis by axis.
    """
    bounds = []
    if grid.dim:
        bounds.append(cfl * grid.spacing / vgrid.max_abs)
    rho_max = None
    if U is not None:
        rho = np.asarray(U)[..., 0]
        rho_max = float(np.nanmax(rho)) if rho.size else None
    if model.kind == "boltzmann":
        cfg = model.spectral
        if cfg.kernel == "maxwell":
            if rho_max is None:
                raise ValueError("Maxwell-molecule bound needs the density field")
            bounds.append(cfg.tau / rho_max)
        else:
            bounds.append(cfg.tau / cfg.loss_bound)
    elif model.kind == "bgk":
        p = model.bgk
        if p.frequency == "density":
            if rho_max is None:
                raise ValueError("BGK density-frequency bound needs the density field")
            bounds.append(p.tau / rho_max)
        else:
            bounds.append(p.tau / p.mu)
    if not bounds:
        raise ValueError("no time-step bound applies; give a fixed dt")
    dt = min(bounds)
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"invalid time step {dt}")
    return dt


@dataclass
class RunDiagnostics:
    """Per-step conservation audit trail."""

    dim: int
    t: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    momentum: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    collision_defect: list = field(default_factory=list)

    def append(self, t, dt, totals, defect):
        self.t.append(float(t))
        self.dt.append(float(dt))
        self.mass.append(float(totals[0]))
        self.momentum.append(np.array(totals[1:-1], dtype=float))
        self.energy.append(float(totals[-1]))
        self.collision_defect.append(float(defect))

    def __len__(self):
        return len(self.t)

    def rows(self):
        for i in range(len(self)):
            yield (i + 1, self.t[i], self.dt[i], self.mass[i], *self.momentum[i], self.energy[i], self.collision_defect[i])

    def header(self):
        mom = [f"momentum_{a}" for a in "xyz"[: self.dim]]
        return ["step", "t", "dt", "mass", *mom, "energy", "collision_defect"]


@dataclass
class RunResult:
    status: int
    steps: int
    t: float
    message: str = ""


class Solver:
    """Time integrator for one phase-space problem.

    ``f0`` has shape ``(*cells, *vshape)``.  ``chunk`` fixes how many cells go
    through one batched collision call; results do not depend on ``workers``.
    """

    def __init__(
        self,
        grid: SpatialGrid,
        vgrid: VelocityGrid,
        model: Model,
        f0,
        schedule: BoundarySchedule | None = None,
        workers: int = 1,
        chunk: int | None = None,
        cfl: float = 1.0,
        project_initial: bool = False,
    ):
        self.grid, self.vgrid, self.model = grid, vgrid, model
        self.proj = Projector(vgrid)
        self.workers = max(1, int(workers))
        self.chunk = int(chunk or max(1, 2**17 // vgrid.size))
        self.cfl = cfl
        if model.kind == "boltzmann":
            cfg = model.spectral
            if (cfg.dim, cfg.n, cfg.bound) != (vgrid.dim, vgrid.n, vgrid.bound):
                raise ValueError("spectral configuration does not match the velocity grid")
            self.tables = precompute_tables(cfg)
        else:
            self.tables = None
        f0 = np.asarray(f0, dtype=float).reshape(grid.shape + (vgrid.size,))
        if project_initial:
            f0 = self.proj.project(f0, self.proj.moments(f0))
        self.transport = Transport(grid, vgrid, self.proj, schedule, initial=f0)
        self.state: DistributionState = self.transport.new_state(f0)
        self.fluid_index = np.flatnonzero(grid.fluid) if grid.dim else np.array([0])
        self.diagnostics = RunDiagnostics(vgrid.dim)
        self.steps = 0
        vol = grid.cell_volume
        self._weights = self.proj.C.T * vol  # (Nv, dv+2)
        self._initial_totals = self.totals()

    @property
    def t(self) -> float:
        return self.state.t

    def distribution(self) -> np.ndarray:
        """Cell-centred distribution, shape ``(*cells, *vshape)``."""
        f = self.transport.sample(self.state)
        return np.array(f).reshape(self.grid.shape + self.vgrid.shape)

    def moments(self) -> np.ndarray:
        """Conserved moments per cell; solid cells hold NaN."""
        U = self.proj.moments(self.transport.sample(self.state).reshape(self.grid.shape + self.vgrid.shape))
        if self.grid.dim:
            U[self.grid.solid] = np.nan
        return U

    def totals(self) -> np.ndarray:
        """Domain totals of mass, momentum and energy."""
        flat = self.state.m.reshape(-1, self.vgrid.size)
        return flat.sum(axis=0) @ self._weights

    def conservation_defect(self) -> np.ndarray:
        """Totals change not explained by boundary fluxes, relative to the initial totals."""
        scale = np.abs(self._initial_totals).max()
        return (self.totals() - self._initial_totals - self.state.inflow) / scale

    def _fluid_moments(self, f, budget=2**27):
        """Moments of the fluid cells of ``f`` (flat layout), computed in chunks."""
        idx = self.fluid_index
        step = max(1, budget // (8 * self.vgrid.size))
        return np.concatenate([self.proj.moments(f[idx[a:a + step]]) for a in range(0, idx.size, step)])

    def compute_dt(self) -> float:
        U = None
        if self.model.kind in ("boltzmann", "bgk"):
            U = self._fluid_moments(self.transport.sample(self.state).reshape(-1, self.vgrid.size))
        return compute_dt(self.grid, self.vgrid, self.model, U, self.cfl)

    def _increment(self, f, U, dt):
        kind = self.model.kind
        if kind == "boltzmann":
            Q = evaluate_q_fast(f.reshape((-1,) + self.vgrid.shape), self.tables)
            return dt * self.proj.project(Q.reshape(f.shape), 0.0)
        if kind == "bgk":
            return bgk_step(f, dt, self.model.bgk, self.proj, U) - f
        return equilibrium_project(U, self.vgrid, self.proj).reshape(f.shape) - f

    def _substeps(self, U, dt):
        """Per-cell substep counts keeping density-scaled collision rates at or below one.

        The time step is chosen from the densities before transport; compression
        during transport can raise them, so the collision is split where needed.
        """
        m = self.model
        if m.kind == "boltzmann" and m.spectral.kernel == "maxwell":
            rate = U[:, 0] * dt / m.spectral.tau
        elif m.kind == "bgk" and m.bgk.frequency == "density" and m.bgk.integrator == "euler":
            rate = U[:, 0] * dt / m.bgk.tau
        else:
            return np.ones(len(U), dtype=int)
        return np.maximum(1, np.ceil(rate * (1.0 - 1e-9))).astype(int)

    def _collide(self, f, U, dt):
        """Increment ``df`` for a batch of cells with shape ``(B, Nv)``."""
        k = self._substeps(U, dt)
        if np.all(k == 1):
            return self._increment(f, U, dt)
        out = np.empty_like(f)
        for n in np.unique(k):
            sel = np.flatnonzero(k == n)
            g = f[sel]
            # moments are collision invariants, so U stays valid across substeps
            for _ in range(n):
                g = g + self._increment(g, U[sel], dt / n)
            out[sel] = g - f[sel]
        return out

    def step(self, dt: float) -> None:
        tr = self.transport
        tr.advance(self.state, dt)
        tr.reanchor(self.state)
        sampled = tr.sample(self.state)
        in_place = sampled is self.state.m
        f = sampled.reshape(-1, self.vgrid.size)
        # with no cumulative shift the increment goes straight into the particles
        df = f if in_place else np.zeros_like(f)
        idx = self.fluid_index
        n = idx.size
        spans = [(a, min(a + self.chunk, n)) for a in range(0, n, self.chunk)]
        step_no = self.steps + 1

        def work(span):
            a, b = span
            rows = idx[a:b]
            fc = f[rows]
            U = self.proj.moments(fc)
            bad = ~np.isfinite(U).all(axis=-1) | ~(U[:, 0] > 0)
            if bad.any():
                raise InstabilityError(
                    f"step {step_no}, t={self.state.t:.6g}: "
                    f"{int(bad.sum())} cell(s) with non-finite moments or non-positive density"
                )
            try:
                out = self._collide(fc, U, dt)
            except (ProjectionError, DegenerateStateError, BgkStabilityError) as exc:
                raise InstabilityError(f"step {step_no}: {exc}") from exc
            if not np.isfinite(out).all():
                raise InstabilityError(f"step {step_no}: non-finite distribution after collision")
            scale = np.abs(U).max(axis=1, keepdims=True)
            defect = float((np.abs(self.proj.moments(out)) / scale).max()) if b > a else 0.0
            return rows, out, defect

        def results():
            # validate every chunk before touching the particles
            if self.workers > 1 and len(spans) > 1:
                with ThreadPoolExecutor(self.workers) as pool:
                    yield from pool.map(work, spans)
            else:
                yield from map(work, spans)

        if in_place:
            pending = list(results()) if len(spans) * self.chunk * self.vgrid.size * 8 <= 2**28 else None
            if pending is None:
                # too large to buffer: moments are checked chunk by chunk on the fly
                defects = []
                for rows, out, dfc in results():
                    f[rows] += out
                    defects.append(dfc)
            else:
                for rows, out, _ in pending:
                    f[rows] += out
                defects = [p[2] for p in pending]
        else:
            defects = []
            for rows, out, dfc in results():
                df[rows] = out
                defects.append(dfc)
            tr.deposit(self.state, df.reshape(self.state.m.shape))
        self.steps += 1
        self.diagnostics.append(self.state.t, dt, self.totals(), max(defects, default=0.0))

    def run(self, t_final: float, dt: float | None = None, callback=None) -> RunResult:
        """Integrate to ``t_final``; the last step is clipped to land on it.

        ``callback(solver)`` runs after every step.  Instabilities stop the
        run and are reported through the returned status.
        """
        tol = 1e-12 * max(1.0, abs(t_final))
        try:
            while t_final - self.state.t > tol:
                h = dt if dt is not None else self.compute_dt()
                h = min(h, t_final - self.state.t)
                self.step(h)
                if callback is not None:
                    callback(self)
        except InstabilityError as exc:
            return RunResult(EXIT_INSTABILITY, self.steps, self.state.t, str(exc))
        return RunResult(EXIT_OK, self.steps, self.state.t)
