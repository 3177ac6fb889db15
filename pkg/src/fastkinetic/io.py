"""Run configuration files, field dumps, error reports and the run driver."""

from __future__ import annotations

import configparser
import csv
import glob
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .cases import CaseConfig, build_solver, default_config, exact_bkw
from .grid import GridError, VelocityGrid
from .macro import MacroState, heat_flux
from .solver import EXIT_CONFIG, EXIT_INSTABILITY, EXIT_OK, Solver

MAGIC = b"FKSB"
VERSION = 1
HEADER = struct.Struct("<4sHH6IdQdd")
assert HEADER.size == 64

FORMATS = ("macro", "binary")


class ConfigError(ValueError):
    pass


class DumpError(ValueError):
    pass


# configuration ----------------------------------------------------------------

_FLOAT, _INT, _STR = float, int, str


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _pairs(text, conv=float):
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            vals = [conv(x) if conv is not str else x.strip() for x in chunk.split(",")]
            if len(vals) != 2:
                raise ConfigError(f"expected 'lo, hi' pairs separated by ';', got {text!r}")
            out.append(tuple(vals))
    return tuple(out)


def _boxes(text):
    # boxes separated by '|', each box is 'lo,hi; lo,hi; ...'
    return tuple(_pairs(b) for b in text.split("|") if b.strip())


def _none_or(conv):
    return lambda text: None if text.strip().lower() in ("", "none", "auto") else conv(text)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


# section -> key -> (CaseConfig attribute or params key, parser)
SCHEMA = {
    "case": {
        "id": ("case", _STR),
        "beta": ("params.beta", _FLOAT),
        "gamma": ("params.gamma", _FLOAT),
        "sigma2": ("params.sigma2", _FLOAT),
        "v1": ("params.v1", _floats),
        "rho": ("params.rho", _FLOAT),
        "u": ("params.u", _floats),
        "T": ("params.T", _FLOAT),
    },
    "grid": {
        "space_dim": ("space_dim", _INT),
        "cells": ("cells", _ints),
        "domain": ("domain", _pairs),
        "boundaries": ("boundaries", lambda t: _pairs(t, str)),
        "solids": ("solids", _boxes),
    },
    "velocity": {
        "dim": ("velocity_dim", _INT),
        "N": ("n", _INT),
        "L": ("bound", _FLOAT),
    },
    "model": {
        "kind": ("model", _STR),
        "tau": ("tau", _FLOAT),
        "kernel": ("kernel", _STR),
        "kernel_constant": ("kernel_constant", _none_or(float)),
        "angles": ("angles", _ints),
        "transverse": ("transverse", _STR),
        "bgk_frequency": ("bgk_frequency", _STR),
        "bgk_mu": ("bgk_mu", _none_or(float)),
        "bgk_integrator": ("bgk_integrator", _STR),
    },
    "time": {
        "t_final": ("t_final", _FLOAT),
        "dt": ("dt", _none_or(float)),
        "cfl": ("cfl", _FLOAT),
    },
    "output": {
        "dump_every": ("output.dump_every", _INT),
        "formats": ("output.formats", lambda t: tuple(x.strip() for x in t.split(",") if x.strip())),
        "binary": ("output.binary", _bool),
    },
}


@dataclass
class OutputPlan:
    dump_every: int = 0
    formats: tuple = FORMATS

    def __post_init__(self):
        for f in self.formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown dump format {f!r}")
        if self.dump_every < 0:
            raise ConfigError("dump_every must be >= 0")


def default_output(cfg: CaseConfig) -> OutputPlan:
    # full distributions of 2D/3D meshes are hundreds of MB per dump
    formats = FORMATS if cfg.space_dim <= 1 else ("macro",)
    return OutputPlan(0, formats)


def parse_config(text: str) -> tuple[CaseConfig, OutputPlan]:
    """Parse INI text into a case configuration and an output plan.

    Values not given fall back to the defaults of the chosen case.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    if not cp.has_option("case", "id"):
        raise ConfigError("missing required key 'id' in [case]")

    try:
        base = default_config(cp["case"]["id"].strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kw, params, out = {}, dict(base.params), {}
    for section in cp.sections():
        for key, raw in cp[section].items():
            target, conv = SCHEMA[section][key]
            try:
                value = conv(raw.strip())
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({exc})") from exc
            if target.startswith("params."):
                params[target[7:]] = value
            elif target.startswith("output."):
                out[target[7:]] = value
            elif target != "case":
                kw[target] = value
    kw["params"] = params
    if "space_dim" in kw and kw["space_dim"] == 0:
        kw.setdefault("cells", ())
        kw.setdefault("domain", ())
    try:
        cfg = base.replace(**kw)
        cfg.velocity_grid()
        cfg.spatial_grid()
        if cfg.model == "boltzmann":
            cfg.spectral_config()
    except (GridError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    plan = default_output(cfg)
    if "binary" in out:
        fm = tuple(f for f in plan.formats if f != "binary")
        plan.formats = fm + (("binary",) if out["binary"] else ())
    if "formats" in out:
        plan.formats = out["formats"]
    plan = OutputPlan(out.get("dump_every", plan.dump_every), plan.formats)
    return cfg, plan


def load_config(path) -> tuple[CaseConfig, OutputPlan]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# dumps ---------------------------------------------------------------------------


@dataclass
class FieldDump:
    """Cell-centred distribution snapshot, ``f`` shaped ``(*cells, *vshape)``."""

    f: np.ndarray
    dv: int
    cells: tuple
    n: int
    t: float
    step: int
    bound: float
    dx: float

    @property
    def velocity_grid(self) -> VelocityGrid:
        return VelocityGrid(self.dv, self.n, self.bound)


def write_dump(path, dump: FieldDump) -> None:
    if not np.all(np.isfinite(dump.f)):
        raise DumpError("refusing to write a non-finite distribution")
    dims = list(dump.cells) + [0] * (3 - len(dump.cells)) + [dump.n] * dump.dv + [0] * (3 - dump.dv)
    head = HEADER.pack(MAGIC, VERSION, dump.dv, *dims, dump.t, dump.step, dump.bound, dump.dx)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(dump.f, dtype="<f8").tobytes())


def read_dump(path) -> FieldDump:
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) != HEADER.size:
            raise DumpError(f"{path}: truncated descriptor")
        magic, version, dv, mx, my, mz, n1, n2, n3, t, step, bound, dx = HEADER.unpack(head)
        if magic != MAGIC or version != VERSION:
            raise DumpError(f"{path}: not a distribution dump (magic {magic!r}, version {version})")
        cells = tuple(m for m in (mx, my, mz) if m)
        ns = [x for x in (n1, n2, n3) if x]
        if len(ns) != dv or len(set(ns)) != 1:
            raise DumpError(f"{path}: inconsistent velocity dimensions")
        shape = cells + (ns[0],) * dv
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise DumpError(f"{path}: payload has {data.size} values, descriptor implies {int(np.prod(shape))}")
    return FieldDump(data.reshape(shape).astype(float), dv, cells, ns[0], t, step, bound, dx)


def solver_dump(solver: Solver) -> FieldDump:
    g, vg = solver.grid, solver.vgrid
    dx = g.spacing if g.dim else 0.0
    return FieldDump(solver.distribution(), vg.dim, g.shape, vg.n, solver.t, solver.steps, vg.bound, dx)


def macro_table(solver: Solver):
    """Header and rows (fluid cells only) of primitive fields and heat flux."""
    g, vg = solver.grid, solver.vgrid
    f = solver.transport.sample(solver.state).reshape(-1, vg.size)
    idx = solver.fluid_index
    step = max(1, 2**27 // (8 * vg.size))
    U = np.concatenate([solver.proj.moments(f[idx[a:a + step]]) for a in range(0, idx.size, step)])
    q = np.concatenate([heat_flux(f[idx[a:a + step]], vg) for a in range(0, idx.size, step)])
    st = MacroState.from_conserved(U, vg.dim, check=False)
    axes = "xyz"
    header = [f"i{axes[a]}" for a in range(g.dim)] + [axes[a] for a in range(g.dim)]
    header += ["rho"] + [f"u{axes[a]}" for a in range(vg.dim)] + ["T"] + [f"q{axes[a]}" for a in range(vg.dim)]
    if g.dim:
        ij = np.unravel_index(idx, g.shape)
        xs = [g.centers[a][ij[a]] for a in range(g.dim)]
    else:
        ij, xs = (), []
    rows = []
    for r in range(len(idx)):
        rows.append(
            [int(ij[a][r]) for a in range(g.dim)]
            + [xs[a][r] for a in range(g.dim)]
            + [st.rho[r], *st.u[r], st.T[r], *q[r]]
        )
    return header, rows


def _fmt(x):
    return str(x) if isinstance(x, (int, np.integer)) else f"{float(x):.17g}"


def write_macro_csv(path, solver: Solver) -> None:
    header, rows = macro_table(solver)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# t={solver.t:.17g} step={solver.steps}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def read_macro_csv(path) -> tuple[list, np.ndarray, float]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        t = float(first.split("t=")[1].split()[0]) if first.startswith("#") else np.nan
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in row] for row in reader], dtype=float)
    return header, data.reshape(-1, len(header)), t


def write_diagnostics(path, solver: Solver) -> None:
    d = solver.diagnostics
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(d.header())
        for row in d.rows():
            w.writerow([_fmt(x) for x in row])


# error reports ------------------------------------------------------------------


@dataclass
class ErrorReport:
    """Relative discrete errors ``||a - b|| / ||b||`` per compared snapshot."""

    times: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    linf: list = field(default_factory=list)

    def add(self, t, a, b, weight=1.0):
        diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        b = np.abs(np.asarray(b, dtype=float))
        self.times.append(float(t))
        self.l1.append(float(np.nansum(diff) * weight / max(np.nansum(b) * weight, np.finfo(float).tiny)))
        self.l2.append(float(np.sqrt(np.nansum(diff**2) / max(np.nansum(b**2), np.finfo(float).tiny))))
        self.linf.append(float(np.nanmax(diff) / max(np.nanmax(b), np.finfo(float).tiny)) if diff.size else 0.0)

    def format(self) -> str:
        lines = ["t,l1,l2,linf"]
        lines += [f"{t:.6g},{a:.6e},{b:.6e},{c:.6e}" for t, a, b, c in zip(self.times, self.l1, self.l2, self.linf)]
        return "\n".join(lines)


def diff(path_a, path_b) -> ErrorReport:
    """Compare two dumps of the same kind (binary distributions or macro CSV)."""
    rep = ErrorReport()
    if str(path_a).endswith(".csv") != str(path_b).endswith(".csv"):
        raise DumpError("cannot compare a macro table with a distribution dump")
    if str(path_a).endswith(".csv"):
        ha, a, ta = read_macro_csv(path_a)
        hb, b, _ = read_macro_csv(path_b)
        if ha != hb or a.shape != b.shape:
            raise DumpError("macro tables have different layouts")
        cols = [i for i, h in enumerate(ha) if not h.startswith("i")]
        rep.add(ta, a[:, cols], b[:, cols])
        return rep
    a, b = read_dump(path_a), read_dump(path_b)
    if a.f.shape != b.f.shape or a.dv != b.dv:
        raise DumpError(f"dimension mismatch: {a.f.shape} vs {b.f.shape}")
    rep.add(a.t, a.f, b.f)
    return rep


def bkw_report(series_dir) -> ErrorReport:
    """Errors of every distribution dump in ``series_dir`` against the exact BKW solution."""
    paths = sorted(glob.glob(os.path.join(series_dir, "dist_*.fksb")))
    if not paths:
        raise DumpError(f"no distribution dumps in {series_dir}")
    rep = ErrorReport()
    for p in paths:
        d = read_dump(p)
        if d.dv != 2 or d.cells:
            raise DumpError(f"{p}: BKW comparison needs a space-homogeneous 2D dump")
        vg = d.velocity_grid
        exact = exact_bkw(vg.points, d.t).reshape(vg.shape)
        rep.add(d.t, d.f, exact)
    return rep


# run driver -------------------------------------------------------------------------


def run_case(cfg: CaseConfig, plan: OutputPlan, output_dir, workers: int = 1, log=print) -> int:
    """Run ``cfg`` writing dumps and diagnostics into ``output_dir``; returns an exit code."""
    try:
        solver = build_solver(cfg, workers=workers)
    except (ValueError, GridError) as exc:
        log(f"configuration error: {exc}")
        return EXIT_CONFIG
    os.makedirs(output_dir, exist_ok=True)

    def dump():
        if not np.all(np.isfinite(solver.state.m)):
            return
        if "macro" in plan.formats:
            write_macro_csv(os.path.join(output_dir, f"macro_{solver.steps:06d}.csv"), solver)
        if "binary" in plan.formats:
            write_dump(os.path.join(output_dir, f"dist_{solver.steps:06d}.fksb"), solver_dump(solver))

    dump()

    def after_step(s):
        if plan.dump_every and s.steps % plan.dump_every == 0:
            dump()

    result = solver.run(cfg.t_final, cfg.dt, callback=after_step)
    if result.status == EXIT_OK and not (plan.dump_every and solver.steps % plan.dump_every == 0 and solver.steps):
        dump()
    write_diagnostics(os.path.join(output_dir, "diagnostics.csv"), solver)
    with open(os.path.join(output_dir, "status.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"status={result.status}\nsteps={result.steps}\nt={result.t:.17g}\n{result.message}\n")
    if result.status == EXIT_INSTABILITY:
        log(f"instability: {result.message}")
    else:
        log(f"finished {result.steps} steps at t={result.t:.6g}")
    return result.status
