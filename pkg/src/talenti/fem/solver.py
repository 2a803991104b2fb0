"""P1 solver for the Dirichlet p-Laplace Poisson problem.

The discrete solution minimises the convex energy

    J(u) = (1/p) sum_T |T| (|grad u|^2 + delta^2)^(p/2) - sum_i M_i f_i u_i

over P1 functions vanishing on the Dirichlet vertices (``M`` is the lumped
mass).  ``p = 2`` is a single SPD solve.  Otherwise damped Newton with an
Armijo backtracking line search runs on a ladder ``delta = delta_start,
delta_start/2, ...`` down to ``delta_reg``; every stage starts from the
previous minimiser.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from talenti.fem.mesh import TriMesh

log = logging.getLogger(__name__)


class SolverDivergence(RuntimeError):
    """Newton did not reach the residual tolerance."""


@dataclass(frozen=True)
class SolverConfig:
    p: float = 2.0
    delta_reg: float = 1e-6
    delta_start: float = 1e-2
    max_newton: int = 200
    energy_tol: float = 1e-14
    residual_tol: float = 1e-9
    armijo: float = 1e-4

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must be > 1")
        if self.delta_reg < 0 or self.delta_start <= 0:
            raise ValueError("regularisation parameters must be nonnegative")
        if self.p != 2 and self.delta_reg == 0:
            raise ValueError("p != 2 needs delta_reg > 0")
        if self.energy_tol <= 0 or self.residual_tol <= 0 or self.max_newton < 1:
            raise ValueError("tolerances must be positive")


@dataclass
class SolveStats:
    iterations: int = 0
    final_energy: float = math.nan
    final_residual: float = math.nan
    energy_trace: list = field(default_factory=list)
    converged: bool = False
    deltas: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class FemFunction:
    """Nodal values of a P1 function with its per-triangle gradients."""

    mesh: TriMesh
    values: np.ndarray
    gradients: np.ndarray = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.mesh.n_vertices,):
            raise ValueError("one value per vertex expected")
        g = np.einsum("tic,ti->tc", self.mesh.shape_gradients, vals[self.mesh.triangles])
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "gradients", g)

    @property
    def grad_norm(self) -> np.ndarray:
        return np.hypot(self.gradients[:, 0], self.gradients[:, 1])

    def gradient_lp(self, r: float) -> float:
        """``int |grad u|^r`` (exact for P1)."""
        return math.fsum((self.grad_norm**r * self.mesh.cell_areas).tolist())

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "u"])
            for (x, y), u in zip(self.mesh.vertices.tolist(), self.values.tolist()):
                w.writerow([format(x + 0.0, ".17g"), format(y + 0.0, ".17g"), format(u + 0.0, ".17g")])


def interpolate(mesh: TriMesh, func) -> FemFunction:
    x, y = mesh.vertices.T
    return FemFunction(mesh, np.broadcast_to(np.asarray(func(x, y), dtype=float), x.shape).copy())


def _gradient_operators(mesh: TriMesh):
    m = len(mesh.triangles)
    rows = np.repeat(np.arange(m), 3)
    cols = mesh.triangles.ravel()
    gx = sp.csr_matrix((mesh.shape_gradients[:, :, 0].ravel(), (rows, cols)), shape=(m, mesh.n_vertices))
    gy = sp.csr_matrix((mesh.shape_gradients[:, :, 1].ravel(), (rows, cols)), shape=(m, mesh.n_vertices))
    return gx, gy


class _Energy:
    def __init__(self, mesh: TriMesh, load: np.ndarray, p: float, free: np.ndarray):
        self.area = mesh.cell_areas
        self.load = load
        self.p = p
        self.free = free
        gx, gy = _gradient_operators(mesh)
        self.gx = gx[:, free].tocsr()
        self.gy = gy[:, free].tocsr()
        self.gxT = self.gx.T.tocsr()
        self.gyT = self.gy.T.tocsr()
        self.b = load[free]

    def value(self, x, delta):
        s = (self.gx @ x) ** 2 + (self.gy @ x) ** 2 + delta**2
        return math.fsum((self.area * s ** (self.p / 2) / self.p).tolist()) - math.fsum((self.b * x).tolist())

    def gradient(self, x, delta):
        gx, gy = self.gx @ x, self.gy @ x
        a = self.area if self.p == 2 else self.area * (gx**2 + gy**2 + delta**2) ** (self.p / 2 - 1)
        return self.gxT @ (a * gx) + self.gyT @ (a * gy) - self.b

    def hessian(self, x, delta):
        gx, gy = self.gx @ x, self.gy @ x
        s = gx**2 + gy**2 + delta**2
        if self.p == 2:
            a, c = np.ones_like(s), np.zeros_like(s)
        else:
            a = s ** (self.p / 2 - 1)
            c = (self.p - 2) * s ** (self.p / 2 - 2)
        dxx = sp.diags(self.area * (a + c * gx * gx))
        dxy = sp.diags(self.area * c * gx * gy)
        dyy = sp.diags(self.area * (a + c * gy * gy))
        return (self.gxT @ dxx @ self.gx + self.gxT @ dxy @ self.gy
                + self.gyT @ dxy @ self.gx + self.gyT @ dyy @ self.gy).tocsc()


def _deltas(cfg: SolverConfig):
    out = []
    d = cfg.delta_start
    while d > cfg.delta_reg:
        out.append(d)
        d *= 0.5
    out.append(cfg.delta_reg)
    return out


def solve_p_laplacian(mesh: TriMesh, f, cfg: SolverConfig | None = None, raise_on_failure: bool = False):
    """Minimise the discrete p-Dirichlet energy with datum ``f`` (nodal values or scalar).

    Returns ``(FemFunction, SolveStats)``; ``stats.converged`` is False if the
    residual tolerance was not met within ``max_newton`` steps per stage.
    """
    cfg = cfg or SolverConfig()
    f = np.broadcast_to(np.asarray(f, dtype=float), (mesh.n_vertices,))
    if not np.all(np.isfinite(f)):
        raise ValueError("datum must be finite")
    free = ~mesh.dirichlet
    load = mesh.lumped_mass() * f
    energy = _Energy(mesh, load, cfg.p, free)
    stats = SolveStats()
    u = np.zeros(mesh.n_vertices)
    scale = max(float(np.max(np.abs(energy.b), initial=0.0)), 1e-300)

    if not np.any(free) or not np.any(energy.b):
        stats.final_energy = energy.value(np.zeros(free.sum()), 0.0 if cfg.p == 2 else cfg.delta_reg)
        stats.final_residual = 0.0
        stats.energy_trace.append(stats.final_energy)
        stats.converged = True
        return FemFunction(mesh, u), stats

    x = np.zeros(free.sum())
    if cfg.p == 2:
        K = energy.hessian(x, 0.0)
        try:
            x = spla.spsolve(K, energy.b)
        except RuntimeError as exc:  # pragma: no cover - singular factor
            raise SolverDivergence("singular stiffness matrix") from exc
        if not np.all(np.isfinite(x)):
            raise SolverDivergence("singular stiffness matrix")
        stats.iterations = 1
        stats.final_energy = energy.value(x, 0.0)
        stats.energy_trace = [energy.value(np.zeros_like(x), 0.0), stats.final_energy]
        stats.final_residual = float(np.max(np.abs(energy.gradient(x, 0.0)))) / scale
        stats.converged = stats.final_residual <= cfg.residual_tol
        u[free] = x
        return FemFunction(mesh, u), stats

    # p = 2 solution as the starting point, rescaled to the right homogeneity
    x = spla.spsolve(_Energy(mesh, load, 2.0, free).hessian(x, 0.0), energy.b)
    amp = float(np.max(np.abs(x)))
    if amp > 0:
        x *= amp ** (1.0 / (cfg.p - 1.0) - 1.0)
    stats.energy_trace.append(energy.value(x, cfg.delta_start))
    converged = True
    for delta in _deltas(cfg):
        stats.deltas.append(delta)
        J = energy.value(x, delta)
        g = energy.gradient(x, delta)
        res = float(np.max(np.abs(g))) / scale
        stage_ok = res <= cfg.residual_tol
        for _ in range(0 if stage_ok else cfg.max_newton):
            H = energy.hessian(x, delta)
            d = spla.spsolve(H, -g)
            slope = float(g @ d)
            if not np.all(np.isfinite(d)) or slope >= 0:
                d, slope = -g, -float(g @ g)
            alpha = 1.0
            while True:
                trial = x + alpha * d
                Jt = energy.value(trial, delta)
                if Jt <= J + cfg.armijo * alpha * slope:
                    break
                # near the minimiser J is flat to rounding: accept if the residual drops
                if abs(Jt - J) <= 64 * np.finfo(float).eps * max(abs(J), 1e-300):
                    if float(np.max(np.abs(energy.gradient(trial, delta)))) / scale < res:
                        break
                alpha *= 0.5
                if alpha < 1e-12:
                    Jt, trial = J, x
                    break
            stats.iterations += 1
            decrease = J - Jt
            x, J = trial, Jt
            stats.energy_trace.append(J)
            g = energy.gradient(x, delta)
            res_new = float(np.max(np.abs(g))) / scale
            stalled = decrease <= cfg.energy_tol * max(abs(J), 1e-300) and res_new > 0.5 * res
            res = res_new
            if res <= cfg.residual_tol:
                stage_ok = True
                break
            if alpha < 1e-12 or stalled:
                break
        log.debug("delta=%.3g energy=%.15g residual=%.3g", delta, J, res)
        if delta == cfg.delta_reg:
            converged = stage_ok
    stats.final_energy = J
    stats.final_residual = res
    stats.converged = converged
    u[free] = x
    if raise_on_failure and not converged:
        raise SolverDivergence(f"residual {res:.3g} above tolerance {cfg.residual_tol:.3g}")
    return FemFunction(mesh, u), stats


def weak_residual(u: FemFunction, f, p: float, delta: float = 0.0) -> np.ndarray:
    """Discrete weak residual ``dJ/du_i`` at every free vertex."""
    mesh = u.mesh
    free = ~mesh.dirichlet
    f = np.broadcast_to(np.asarray(f, dtype=float), (mesh.n_vertices,))
    e = _Energy(mesh, mesh.lumped_mass() * f, p, free)
    return e.gradient(u.values[free], delta)
