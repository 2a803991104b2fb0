"""P1 finite elements for the Dirichlet p-Laplace Poisson problem in 2-D."""

from talenti.fem.levels import (
    coarea_sides,
    distribution_profile,
    fem_to_measured,
    superlevel_gradient_integral,
    superlevel_measure,
    superlevel_perimeter,
)
from talenti.fem.mesh import Annulus, Disk, Sector, Square, TriMesh, generate_mesh, read_off, write_off
from talenti.fem.solver import FemFunction, SolverConfig, SolverDivergence, SolveStats, interpolate, solve_p_laplacian

__all__ = [
    "Annulus",
    "Disk",
    "FemFunction",
    "Sector",
    "SolveStats",
    "SolverConfig",
    "SolverDivergence",
    "Square",
    "TriMesh",
    "coarea_sides",
    "distribution_profile",
    "fem_to_measured",
    "generate_mesh",
    "interpolate",
    "read_off",
    "solve_p_laplacian",
    "superlevel_gradient_integral",
    "superlevel_measure",
    "superlevel_perimeter",
    "write_off",
]
