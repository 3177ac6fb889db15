"""Homogeneous Maxwell-molecule relaxation against the closed-form BKW profile.

Runs the 32x32 lattice to t=10 and prints the relative L1 error every unit of time.
"""

import numpy as np

from fastkinetic.cases import build_solver, default_config, exact_bkw


def main():
    s = build_solver(default_config("bkw2d"))
    print("   t     rel. L1")
    for target in range(1, 11):
        s.run(float(target), dt=0.02)
        f = s.distribution().ravel()
        ref = exact_bkw(s.vgrid.points, s.t)
        print(f"{s.t:5.1f}  {np.abs(f - ref).sum() / np.abs(ref).sum():.3e}")


if __name__ == "__main__":
    main()
