"""Explicit solution of the radial p-Laplace Poisson problem on a weighted half-line.

On ``[0, R)`` with density ``h`` and datum ``f >= 0`` the Dirichlet problem
``-L_p v = f, v(R) = 0`` is solved by

    v(rho) = int_rho^R g(u)^(1/(p-1)) du,   g(u) = (1/h(u)) int_0^u f h ds,

and ``v' = -g^(1/(p-1))``.  Both integrals are adaptive Gauss-Kronrod
(``scipy.integrate.quad``).  The inner integral is cached at a node grid and
completed locally on demand, so evaluation at any radius costs one short
inner quadrature per outer abscissa instead of a full nested sweep.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate

from talenti import model_space
from talenti.weighted_space import WeightedHalfLine, cone, model

INNER_EPSREL = 1e-12
OUTER_EPSREL = 1e-10
SOLVER_TOL = 1e-8


class RadialSolverError(RuntimeError):
    """The quadrature detected a non-integrable datum or diverged."""


@dataclass(frozen=True, eq=False)
class Datum:
    """A nonnegative radial datum with optional jump locations.

    ``breakpoints`` are added to the quadrature grid so that every integration
    interval sees a smooth integrand.
    """

    func: Callable[[float], float]
    breakpoints: tuple = ()
    constant: float | None = None

    def scalar(self, t: float) -> float:
        if self.constant is not None:
            return self.constant
        return float(self.func(t))

    def __call__(self, t):
        if self.constant is not None:
            return np.full_like(np.asarray(t, dtype=float), self.constant)
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.func(t), dtype=float), t.shape).copy()

    def scaled(self, lam: float) -> "Datum":
        if self.constant is not None:
            return constant(lam * self.constant)
        return Datum(lambda t: lam * self.func(t), self.breakpoints)

    @classmethod
    def from_samples(cls, t, f) -> "Datum":
        t = np.asarray(t, dtype=float)
        f = np.asarray(f, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("need increasing sample abscissae matching the values")
        if np.any(f < 0):
            raise ValueError("the radial datum must be nonnegative")
        return cls(lambda x: np.interp(x, t, f), tuple(float(x) for x in t))

    @classmethod
    def from_csv(cls, path) -> "Datum":
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"t", "f"} <= set(reader.fieldnames):
                raise ValueError("datum CSV must have columns 't,f'")
            rows = [(float(r["t"]), float(r["f"])) for r in reader]
        t, f = zip(*rows)
        return cls.from_samples(t, f)


def constant(c: float) -> Datum:
    return Datum(lambda t: c, (), float(c))


def _as_datum(f) -> Datum:
    if isinstance(f, Datum):
        return f
    if isinstance(f, (int, float)):
        return constant(float(f))
    return Datum(f)


def _quad(fun, a, b, epsrel):
    if b <= a:
        return 0.0
    with np.errstate(all="ignore"):
        val, err, *info = integrate.quad(fun, a, b, epsabs=0.0, epsrel=epsrel, limit=400, full_output=1)
    if not math.isfinite(val) or (len(info) >= 2 and "divergent" in str(info[1]).lower()):
        raise RadialSolverError(f"quadrature diverged on [{a}, {b}]")
    return val


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """The radial solution ``v`` on ``[0, R]`` with its derivative.

    ``rho``, ``v_nodes``, ``dv_nodes`` sample the solution on the node grid;
    :meth:`v` and :meth:`dv` evaluate it anywhere on ``[0, R]`` by completing
    the quadrature from the nearest node.
    """

    space: WeightedHalfLine
    R: float
    p: float
    datum: Datum
    rho: np.ndarray
    v_nodes: np.ndarray
    dv_nodes: np.ndarray
    inner_nodes: np.ndarray

    def _inner(self, u: float) -> float:
        """``int_0^u f h``."""
        if u <= 0.0:
            return 0.0
        k = int(np.searchsorted(self.rho, u, side="right")) - 1
        k = min(k, self.rho.size - 1)
        a = self.rho[k]
        return self.inner_nodes[k] + _quad(_weighted_datum(self.datum, self.space), a, u, INNER_EPSREL)

    def _g(self, u: float) -> float:
        if u <= 0.0:
            return 0.0
        return self._inner(u) / float(self.space.density(u))

    def _slope(self, u: float) -> float:
        g = self._g(u)
        return max(g, 0.0) ** (1.0 / (self.p - 1.0))

    def v(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.array([self._v_scalar(float(r)) for r in rho.ravel()]).reshape(rho.shape)
        return out[()] if out.ndim == 0 else out

    def _v_scalar(self, r: float) -> float:
        if r < 0 or r > self.R * (1 + 1e-14):
            raise ValueError(f"radius {r} outside [0, {self.R}]")
        r = min(r, self.R)
        k = int(np.searchsorted(self.rho, r, side="left"))
        if k < self.rho.size and self.rho[k] == r:
            return float(self.v_nodes[k])
        return float(self.v_nodes[k]) + _quad(self._slope, r, self.rho[k], OUTER_EPSREL)

    def dv(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = -np.array([self._slope(float(r)) for r in rho.ravel()]).reshape(rho.shape)
        return out[()] if out.ndim == 0 else out

    def to_csv(self, path, rho=None) -> None:
        """Write ``rho,v,dv`` rows (17 significant digits)."""
        if rho is None:
            rho, v, dv = self.rho, self.v_nodes, self.dv_nodes
        else:
            rho = np.asarray(rho, dtype=float)
            v, dv = self.v(rho), self.dv(rho)
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "v", "dv"])
            for row in zip(np.atleast_1d(rho).tolist(), np.atleast_1d(v).tolist(), np.atleast_1d(dv).tolist()):
                w.writerow([format(x + 0.0, ".17g") for x in row])


def _weighted_datum(datum: Datum, space: WeightedHalfLine):
    """Scalar ``s -> f(s) h(s)`` without the array checks of the public wrappers."""
    dens = space.density
    if datum.constant is not None:
        c = datum.constant
        return lambda s: c * float(dens(s))
    func = datum.func
    return lambda s: float(func(s)) * float(dens(s))


def _node_grid(R: float, n: int, breakpoints, extra=()) -> np.ndarray:
    pts = set(np.linspace(0.0, R, n + 1).tolist())
    pts.update(b for b in breakpoints if 0.0 < b < R)
    pts.update(float(b) for b in np.ravel(extra) if 0.0 < b < R)
    return np.array(sorted(pts))


def solve_radial_poisson(space: WeightedHalfLine, R: float, f=1.0, p: float = 2.0, nodes: int = 64,
                         extra_nodes=()) -> RadialSolution:
    """Solve ``-L_p v = f`` on ``[0, R)`` of ``space`` with ``v(R) = 0``.

    The solution is tabulated on ``nodes`` uniform intervals plus the datum
    breakpoints and any ``extra_nodes``; values there are returned without
    further quadrature.
    """
    p = float(p)
    if not (math.isfinite(p) and p > 1.0):
        raise ValueError(f"exponent p must be > 1, got {p}")
    if not (math.isfinite(R) and R > 0):
        raise ValueError("ball radius R must be positive")
    if R > space.t_max:
        raise ValueError("ball radius exceeds the range of the space")
    datum = _as_datum(f)
    rho = _node_grid(float(R), nodes, datum.breakpoints, extra_nodes)
    probe = np.concatenate([rho, 0.5 * (rho[1:] + rho[:-1])])
    fvals = datum(probe)
    if np.any(fvals < 0):
        raise ValueError("the radial datum must be nonnegative")
    if not np.all(np.isfinite(fvals[probe > 0])):
        raise RadialSolverError("datum is not finite on (0, R]")

    fh = _weighted_datum(datum, space)
    pieces = [_quad(fh, a, b, INNER_EPSREL) for a, b in zip(rho[:-1], rho[1:])]
    inner = np.concatenate([[0.0], np.cumsum(pieces)])
    if not np.all(np.isfinite(inner)):
        raise RadialSolverError("inner integral diverged")

    sol = RadialSolution(space, float(R), p, datum, rho, np.zeros_like(rho), np.zeros_like(rho), inner)
    outer = [_quad(sol._slope, a, b, OUTER_EPSREL) for a, b in zip(rho[:-1], rho[1:])]
    v_nodes = np.concatenate([np.cumsum(outer[::-1])[::-1], [0.0]])
    dv_nodes = -np.array([sol._slope(float(r)) for r in rho])
    object.__setattr__(sol, "v_nodes", v_nodes)
    object.__setattr__(sol, "dv_nodes", dv_nodes)
    return sol


def solve_model_mass_form(N: float, R: float, f=1.0, p: float = 2.0, rho=None):
    """The model-space solution written in the mass coordinate ``sigma = H_N(u)``.

    ``v(rho) = int_{H_N(rho)}^{H_N(R)} I(s)^{-1} (I(s)^{-1} int_0^s f(H_N^{-1}(t)) dt)^{1/(p-1)} ds``
    with ``I = h_N o H_N^{-1}``.  Independent of :func:`solve_radial_poisson`;
    used as a cross-check.
    """
    datum = _as_datum(f)
    rho = np.atleast_1d(np.asarray(rho if rho is not None else np.linspace(0, R, 11), dtype=float))
    top = float(model_space.big_h_n(N, R))
    brk = sorted(float(model_space.big_h_n(N, b)) for b in datum.breakpoints if 0 < b < R)

    w = model_space.omega_n(N)
    iso = N * w ** (1.0 / N)

    def f_mass(t):
        return datum.scalar((t / w) ** (1.0 / N))

    def integrand(s):
        if s <= 0.0:
            return 0.0
        I = iso * s ** ((N - 1.0) / N)
        inner = _quad(f_mass, 0.0, s, INNER_EPSREL)
        return (inner / I) ** (1.0 / (p - 1.0)) / I

    # integrate each segment between consecutive cut points once, then sum tails
    los = [min(float(model_space.big_h_n(N, r)), top) for r in rho.tolist()]
    cuts = sorted(set(los + brk + [top]))
    pieces = [_quad(integrand, a, b, OUTER_EPSREL) for a, b in zip(cuts[:-1], cuts[1:])]
    index = {c: k for k, c in enumerate(cuts)}
    return np.array([math.fsum(pieces[index[lo]:]) for lo in los])


def radial_gradient_norms(sol: RadialSolution, r: float) -> float:
    """``int_0^R |v'|^r h dt``."""
    if r < 1:
        raise ValueError("gradient exponent must be >= 1")
    pieces = [
        _quad(lambda u: sol._slope(u) ** r * float(sol.space.density(u)), a, b, 1e-10)
        for a, b in zip(sol.rho[:-1], sol.rho[1:])
    ]
    return math.fsum(pieces)


def radial_lp_norm(sol: RadialSolution, r: float) -> float:
    """``(int_0^R |v|^r h dt)^(1/r)``."""
    pieces = [
        _quad(lambda u: abs(sol._v_scalar(u)) ** r * float(sol.space.density(u)), a, b, 1e-9)
        for a, b in zip(sol.rho[:-1], sol.rho[1:])
    ]
    return math.fsum(pieces) ** (1.0 / r)


@dataclass(frozen=True)
class ClosedFormSolution:
    """Analytic radial solution for ``f = 1`` on model spaces and cones."""

    N: float
    R: float
    p: float

    def v(self, rho):
        a = self.p / (self.p - 1.0)
        rho = np.asarray(rho, dtype=float)
        return (self.p - 1.0) / self.p * self.N ** (-1.0 / (self.p - 1.0)) * (self.R**a - rho**a)

    def dv(self, rho):
        return -(np.asarray(rho, dtype=float) / self.N) ** (1.0 / (self.p - 1.0))


def closed_form_oracle_constant_f(kind: str, R: float, p: float, N: float) -> ClosedFormSolution:
    """For ``f = 1`` both kinds give ``g(u) = u / N`` whatever the cone constant."""
    if kind not in ("model", "cone"):
        raise ValueError(f"no closed form for space kind {kind!r}")
    return ClosedFormSolution(float(N), float(R), float(p))


__all__ = [
    "ClosedFormSolution",
    "Datum",
    "RadialSolution",
    "RadialSolverError",
    "closed_form_oracle_constant_f",
    "constant",
    "cone",
    "model",
    "radial_gradient_norms",
    "radial_lp_norm",
    "solve_model_mass_form",
    "solve_radial_poisson",
]
