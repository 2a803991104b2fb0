#!/usr/bin/env python3
"""Nodal sup-error of the P1 p-Laplace solver on the unit disk with f = 1.

Usage: python3 scripts/disk_convergence.py [--p 2] [--h 0.1 0.05 0.025 0.0125]
"""

import argparse

import numpy as np

from talenti import fem
from talenti.radial_solver import closed_form_oracle_constant_f


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--h", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
    args = ap.parse_args()

    exact = closed_form_oracle_constant_f("model", 1.0, args.p, 2.0)
    prev = None
    print(f"{'h':>8} {'vertices':>9} {'newton':>7} {'sup error':>12} {'ratio':>7}")
    for h in args.h:
        mesh = fem.generate_mesh(fem.Disk(1.0), h)
        u, stats = fem.solve_p_laplacian(mesh, 1.0, fem.SolverConfig(p=args.p))
        err = float(np.max(np.abs(u.values - exact.v(np.hypot(*mesh.vertices.T)))))
        ratio = f"{prev / err:7.2f}" if prev else "      -"
        print(f"{h:8.4f} {mesh.n_vertices:9d} {stats.iterations:7d} {err:12.4e} {ratio}")
        prev = err


if __name__ == "__main__":
    main()
