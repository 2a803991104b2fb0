"""Desk-scale verification of Talenti-type comparison for the p-Laplacian.

Submodules
----------
model_space     closed forms of the model half-line
weighted_space  CD(0,N) weighted half-lines and their checks
rearrangement   distribution functions and Schwarz symmetrization
radial_solver   explicit radial solutions by nested quadrature
fem             P1 p-Laplace solver on 2-D domains, level-set geometry
comparison      Talenti, gradient, Polya-Szego, isoperimetric and coarea checks
rigidity_lab    deficit versus cone-distance sweeps
cli             JSON-configured batch driver
"""

__version__ = "0.1.0"
