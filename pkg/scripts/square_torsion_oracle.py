#!/usr/bin/env python3
"""Series value of the torsion function at the centre of the unit square,
compared with the FEM centre value on a few meshes.

    u(1/2, 1/2) = 1/8 - (4/pi^3) sum_{n odd} (-1)^((n-1)/2) / (n^3 cosh(n pi / 2))
"""

import math

import numpy as np

from talenti import fem


def series(terms=60):
    s = math.fsum((-1) ** ((n - 1) // 2) / (n**3 * math.cosh(n * math.pi / 2)) for n in range(1, 2 * terms, 2))
    return 0.125 - 4.0 / math.pi**3 * s


def main():
    ref = series()
    print(f"series centre value: {ref:.15f}")
    for h in (0.1, 0.05, 0.025, 0.0125):
        mesh = fem.generate_mesh(fem.Square(1.0), h)
        u, _ = fem.solve_p_laplacian(mesh, 1.0)
        k = int(np.argmin(np.hypot(mesh.vertices[:, 0] - 0.5, mesh.vertices[:, 1] - 0.5)))
        print(f"h = {h:<7g} FEM {u.values[k]:.10f}  error {abs(u.values[k] - ref):.3e}")


if __name__ == "__main__":
    main()
