"""L2-minimal moment correction of discrete distributions.

Given a vector ``g`` of nodal values, :meth:`Projector.project` returns the
closest vector (in the Euclidean norm) whose discrete mass, momentum and energy
equal a prescribed target ``U``::

    f = g + P (U - C g),    P = C^T (C C^T)^{-1}

The constraint matrix ``C`` has rows ``dv^d * (1, v, |v|^2 / 2)`` so that
``C f`` are exactly the conserved moments returned by
:func:`fastkinetic.macro.compute_moments`.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .grid import GridError, VelocityGrid


class ProjectionError(ValueError):
    pass


def constraint_matrix(vgrid: VelocityGrid) -> np.ndarray:
    w = vgrid.cell_volume
    rows = [np.ones(vgrid.size)]
    rows += [vgrid.points[:, a] for a in range(vgrid.dim)]
    rows.append(0.5 * vgrid.speed2)
    return w * np.array(rows)


class Projector:
    """Precomputed conservation projector for one velocity lattice.

    ``C C^T`` is never formed explicitly: a thin QR factorisation ``C^T = Q R``
    gives ``P = Q R^{-T}``, which keeps ``C P = I`` at round-off level even
    when the energy row is several orders of magnitude larger than the mass row.
    """

    def __init__(self, vgrid: VelocityGrid, max_condition: float = 1e12):
        n_mom = vgrid.dim + 2
        if vgrid.size < n_mom:
            raise ProjectionError(f"lattice has {vgrid.size} nodes, need at least {n_mom}")
        self.vgrid = vgrid
        self.C = constraint_matrix(vgrid)
        q, r = np.linalg.qr(self.C.T)
        # cond(C C^T) = cond(R)^2
        cond = np.linalg.cond(r) ** 2
        if not np.isfinite(cond) or cond > max_condition:
            raise ProjectionError(f"C C^T is numerically singular (condition {cond:.3e})")
        self.condition = float(cond)
        # P = Q R^{-T}
        self.P = scipy.linalg.solve_triangular(r, q.T, lower=False).T
        self.C.setflags(write=False)
        self.P.setflags(write=False)

    @property
    def n_moments(self) -> int:
        return self.C.shape[0]

    def _lead(self, shape):
        try:
            return self.vgrid.lead_shape(shape)
        except GridError as exc:
            raise ProjectionError(str(exc)) from None

    def moments(self, f: np.ndarray) -> np.ndarray:
        """Conserved moments of ``f`` with shape ``(..., *vshape)`` or ``(..., Nv)``."""
        f = np.asarray(f)
        out = f.reshape(-1, self.vgrid.size) @ self.C.T
        return out.reshape(self._lead(f.shape) + (self.n_moments,))

    def project(self, f: np.ndarray, target=0.0) -> np.ndarray:
        """Closest distribution to ``f`` whose moments equal ``target``.

        ``f`` has shape ``(..., *vshape)`` or ``(..., Nv)``; ``target`` broadcasts against
        ``(..., dv + 2)``. ``target=0`` removes every conserved moment, which is
        how collision outputs are made exactly conservative.
        """
        f = np.asarray(f, dtype=float)
        if not np.all(np.isfinite(f)):
            raise ProjectionError("cannot project a non-finite distribution")
        lead = self._lead(f.shape)
        flat = f.reshape(-1, self.vgrid.size)
        target = np.broadcast_to(np.asarray(target, dtype=float), lead + (self.n_moments,))
        defect = target.reshape(-1, self.n_moments) - flat @ self.C.T
        out = flat + defect @ self.P.T
        return out.reshape(f.shape)


def build_projector(vgrid: VelocityGrid) -> Projector:
    return Projector(vgrid)


def project(f, target, proj: Projector) -> np.ndarray:
    return proj.project(f, target)
