"""L1 distance between BGK and Boltzmann evolutions of the same BKW initial data."""

import numpy as np

from fastkinetic.cases import build_solver, default_config

b = build_solver(default_config("bkw2d"))
g = build_solver(default_config("bkw2d").replace(model="bgk"))
for k in range(1, 501):
    b.step(0.02)
    g.step(0.02)
    if k % 25 == 0:
        d = np.abs(b.distribution() - g.distribution()).sum() * b.vgrid.cell_volume
        print(f"t={b.t:5.2f}  |f_boltzmann - f_bgk|_1 = {d:.4e}")
