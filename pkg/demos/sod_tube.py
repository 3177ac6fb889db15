"""Sod shock tube with Boltzmann collisions on a 2D velocity lattice.

Prints density, velocity and temperature every fifth cell at t = 0.15.
"""

from fastkinetic.cases import build_solver, default_config
from fastkinetic.macro import MacroState


def main(cells=100):
    s = build_solver(default_config("sod2v").replace(cells=(cells,)))
    res = s.run(0.15)
    print(f"status {res.status} after {res.steps} steps; mass defect {s.conservation_defect()[0]:.1e}")
    U = s.moments()
    st = MacroState.from_conserved(U, 2)
    x = s.grid.centers[0]
    print("    x      rho      u        T")
    for i in range(0, cells, 5):
        print(f"{x[i]:6.3f}  {st.rho[i]:.4f}  {st.u[i, 0]: .4f}  {st.T[i]:.4f}")


if __name__ == "__main__":
    main()
