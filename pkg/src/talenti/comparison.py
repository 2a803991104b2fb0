"""Numerical verification of the Talenti comparison and the inequalities behind it.

For a domain ``Omega`` in a space with asymptotic volume ratio ``AVR`` and a
datum ``f`` the pipeline solves ``-L_p u = f`` on ``Omega``, symmetrizes
``u`` onto the model space, solves the radial problem with datum ``f*`` on the
model ball of the same measure, and then checks

* ``AVR^{q/N} u* <= v`` (margin, deficit),
* ``AVR^{r/((p-1)N)} int |grad u|^r <= int |v'|^r dm_N`` for ``r`` in ``[1, p]``,
* ``AVR^{p/N} int |(u*)'|^p dm_N <= int |grad u|^p`` (Polya-Szego),
* ``Per({|u| > t}) >= N omega_N^{1/N} AVR^{1/N} m({|u| > t})^{(N-1)/N}``,
* the coarea identity ``int_{|u|>t} |grad u| = int_t^max Per({|u| > s}) ds``.

Two kinds of instances are supported: P1 finite elements on flat 2-D domains
(:func:`compare_fem`) and weighted half-lines, where every quantity reduces
to quadrature (:func:`compare_half_line`).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from talenti import fem, model_space
from talenti.model_space import big_h_inv, big_h_n, h_n
from talenti.radial_solver import SOLVER_TOL, Datum, RadialSolution, constant, radial_gradient_norms, solve_radial_poisson
from talenti.weighted_space import WeightedHalfLine, model

# Discretisation budget for FEM instances: tol_mesh = MESH_CONSTANT * h * v(0).
# Calibrated on the disk equality case, where the exact margin is zero.
MESH_CONSTANT = 0.05
HALF_LINE_TOL = 1e-6
CORE_FRACTION = 0.95


@dataclass
class TalentiResult:
    margin: float
    margin_full: float
    deficit: float
    violation: float
    tolerance: float
    passed: bool


@dataclass
class InequalityPair:
    lhs: float
    rhs: float
    tolerance: float
    passed: bool

    @property
    def gap(self) -> float:
        return self.rhs - self.lhs


@dataclass
class ComparisonReport:
    instance: dict
    N: float
    p: float
    avr: float
    r_a: float
    domain_measure: float
    scale: float
    talenti: TalentiResult
    gradient_checks: dict
    polya_szego: InequalityPair
    isoperimetric_min_ratio: float
    isoperimetric_tolerance: float
    isoperimetric_levels: list
    isoperimetric_skipped: list
    coarea_max_relative_residual: float
    deficit_scale: float
    equality_tolerance: float
    equality_detected: bool = False
    seconds: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def talenti_margin(self) -> float:
        return self.talenti.margin

    @property
    def talenti_deficit(self) -> float:
        return self.talenti.deficit

    @property
    def passed(self) -> bool:
        return (
            self.talenti.passed
            and all(g.passed for g in self.gradient_checks.values())
            and self.polya_szego.passed
            and self.isoperimetric_min_ratio >= 1.0 - self.isoperimetric_tolerance
        )

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "instance": self.instance,
            "N": self.N,
            "p": self.p,
            "q": self.p / (self.p - 1.0),
            "avr": self.avr,
            "r_a": self.r_a,
            "domain_measure": self.domain_measure,
            "scale": self.scale,
            "talenti": asdict(self.talenti),
            "gradient_checks": {k: {**asdict(v), "gap": v.gap} for k, v in self.gradient_checks.items()},
            "polya_szego": {**asdict(self.polya_szego), "gap": self.polya_szego.gap},
            "isoperimetric": {
                "min_ratio": self.isoperimetric_min_ratio,
                "tolerance": self.isoperimetric_tolerance,
                "levels": self.isoperimetric_levels,
                "skipped_levels": self.isoperimetric_skipped,
                "passed": self.isoperimetric_min_ratio >= 1.0 - self.isoperimetric_tolerance,
            },
            "coarea_max_relative_residual": self.coarea_max_relative_residual,
            "deficit_scale": self.deficit_scale,
            "equality_tolerance": self.equality_tolerance,
            "equality_detected": self.equality_detected,
            "passed": self.passed,
            "extras": self.extras,
        }
        if timing:
            d["seconds"] = self.seconds
        return d

    def to_json(self, path=None, timing: bool = False) -> str:
        text = json.dumps(_finite(self.to_dict(timing)), indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    CSV_COLUMNS = (
        "name", "N", "p", "avr", "r_a", "talenti_margin", "talenti_deficit", "grad_r1_gap",
        "grad_rmid_gap", "grad_rp_gap", "polya_szego_gap", "iso_min_ratio", "coarea_residual",
        "equality", "passed",
    )

    def csv_row(self) -> list:
        g = list(self.gradient_checks.values())
        vals = [
            self.instance.get("name", ""), self.N, self.p, self.avr, self.r_a, self.talenti.margin,
            self.talenti.deficit, g[0].gap, g[1].gap, g[2].gap, self.polya_szego.gap,
            self.isoperimetric_min_ratio, self.coarea_max_relative_residual,
            int(self.equality_detected), int(self.passed),
        ]
        return [v if isinstance(v, str) else format(float(v), ".17g") for v in vals]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        w.writerow(self.csv_row())
        if path is not None:
            Path(path).write_text(buf.getvalue())
        return buf.getvalue()


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _trapezoid(y, x) -> float:
    return float(np.sum(0.5 * np.diff(x) * (y[1:] + y[:-1])))


def _simpson(y, x) -> float:
    return max(float(integrate.simpson(y, x=x)), 0.0)


def talenti_compare(ustar, v, x, avr: float, p: float, N: float, tol: float,
                    core: float = CORE_FRACTION) -> TalentiResult:
    """Compare ``AVR^{q/N} u*`` with ``v`` sampled on the common grid ``x``.

    ``margin`` is ``min(v - AVR^{q/N} u*)`` over ``x <= core * r_a`` (both sides
    vanish at ``r_a``); ``margin_full`` uses the whole grid and decides PASS.
    ``deficit`` is the ``L^p(m_N)`` norm of the difference, ``violation`` that
    of its positive part ``(AVR^{q/N} u* - v)_+``, both by Simpson's rule on ``x``.
    """
    x = np.asarray(x, dtype=float)
    ustar = np.asarray(ustar, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (x.shape == ustar.shape == v.shape) or x.ndim != 1 or x.size < 2:
        raise ValueError("u*, v and the grid must have the same 1-D shape")
    if np.any(np.diff(x) <= 0) or x[0] != 0.0:
        raise ValueError("grid must start at 0 and increase")
    q = p / (p - 1.0)
    diff = v - avr ** (q / N) * ustar
    r_a = x[-1]
    inner = x <= core * r_a
    margin = float(np.min(diff[inner]))
    margin_full = float(np.min(diff))
    w = h_n(N, x)
    deficit = _simpson(np.abs(diff) ** p * w, x) ** (1.0 / p)
    violation = _simpson(np.maximum(-diff, 0.0) ** p * w, x) ** (1.0 / p)
    return TalentiResult(margin, margin_full, deficit, violation, tol, margin_full >= -tol)


def gradient_lr_check(grad_integral: float, v: RadialSolution, avr: float, r: float, p: float, N: float,
                      tol: float) -> InequalityPair:
    """``AVR^{r/((p-1)N)} int |grad u|^r`` against ``int |v'|^r dm_N``."""
    if not 1.0 <= r <= p:
        raise ValueError("gradient exponent must lie in [1, p]")
    lhs = avr ** (r / ((p - 1.0) * N)) * grad_integral
    rhs = radial_gradient_norms(v, r)
    return InequalityPair(lhs, rhs, tol * max(rhs, 1e-300), lhs <= rhs + tol * max(rhs, 1e-300))


def profile_gradient_energy(x, ustar, p: float, N: float) -> float:
    """``int |(u*)'|^p dm_N`` by centred differences on the monotone-clamped profile."""
    prof = np.minimum.accumulate(np.asarray(ustar, dtype=float))
    d = np.gradient(prof, x)
    return _trapezoid(np.abs(d) ** p * h_n(N, x), x)


def polya_szego_check(grad_p_integral: float, symmetrized_energy: float, avr: float, p: float, N: float,
                      tol: float) -> InequalityPair:
    """``AVR^{p/N} int |(u*)'|^p dm_N`` against ``int |grad u|^p``."""
    lhs = avr ** (p / N) * symmetrized_energy
    rhs = grad_p_integral
    return InequalityPair(lhs, rhs, tol * max(rhs, 1e-300), lhs <= rhs + tol * max(rhs, 1e-300))


def isoperimetric_ratios(perimeters, measures, avr: float, N: float):
    perimeters = np.asarray(perimeters, dtype=float)
    measures = np.asarray(measures, dtype=float)
    return perimeters / (avr ** (1.0 / N) * model_space.i_n(N, measures))


def isoperimetric_check(perimeters, measures, avr: float, N: float):
    """Minimum isoperimetric ratio over the nonempty level sets and the skipped indices."""
    measures = np.asarray(measures, dtype=float)
    keep = measures > 0
    skipped = [int(i) for i in np.flatnonzero(~keep)]
    if not np.any(keep):
        return math.inf, skipped
    ratios = isoperimetric_ratios(np.asarray(perimeters)[keep], measures[keep], avr, N)
    return float(np.min(ratios)), skipped


def coarea_check(lhs, rhs) -> float:
    """Largest relative residual between the two sides of the coarea identity."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    denom = np.maximum(np.abs(lhs), np.abs(rhs))
    rel = np.where(denom > 0, np.abs(lhs - rhs) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(np.max(rel)) if rel.size else 0.0


def detect_equality(report: ComparisonReport, eq_tol: float | None = None) -> bool:
    """True iff both the margin and the deficit vanish to ``eq_tol`` (relative)."""
    eq_tol = report.equality_tolerance if eq_tol is None else eq_tol
    if report.scale == 0.0:
        return True
    return (abs(report.talenti.margin) <= eq_tol * report.scale
            and report.talenti.deficit <= eq_tol * report.deficit_scale)


def _finish(report: ComparisonReport, eq_tol):
    if eq_tol is not None:
        report.equality_tolerance = eq_tol
    report.equality_detected = detect_equality(report)
    return report


def _model_lp_norm(x, vals, p, N):
    return _simpson(np.abs(vals) ** p * h_n(N, x), x) ** (1.0 / p)


# ---------------------------------------------------------------- FEM instances


def domain_avr(domain) -> float:
    """Analytic AVR of the ambient space: the plane, or the cone for a sector."""
    if isinstance(domain, fem.Sector) and not math.isclose(domain.theta, 2 * math.pi):
        return domain.theta / (2 * math.pi)
    return 1.0


def symmetrized_datum(mesh, f, N: float, samples: int = 257) -> Datum:
    """Schwarz symmetrization of a nodal datum as a radial :class:`Datum`."""
    f = np.broadcast_to(np.asarray(f, dtype=float), (mesh.n_vertices,))
    if np.all(f == f[0]):
        return constant(abs(float(f[0])))
    r_a = float(big_h_inv(2.0 if N is None else N, mesh.area))
    xs = np.linspace(0.0, r_a, samples)
    prof = fem.distribution_profile(fem.FemFunction(mesh, f), N, xs)
    # samples double as quadrature breakpoints: the integrands are smooth in between
    return Datum.from_samples(xs, prof)


def compare_fem(domain, f=1.0, p: float = 2.0, h: float = 0.05, *, mesh=None, avr: float | None = None,
                solver: fem.SolverConfig | None = None, levels: int = 10, grid: int = 401,
                eq_tol: float | None = None, name: str = "") -> ComparisonReport:
    """Full comparison for a flat 2-D domain (``N = 2``).

    ``f`` is a scalar, nodal array, or ``callable(x, y)``.
    """
    start = time.perf_counter()
    N = 2.0
    h_eff = float(h) if mesh is None else mesh.max_edge()
    mesh = mesh if mesh is not None else fem.generate_mesh(domain, h)
    if callable(f):
        fvals = np.asarray(f(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)
        fvals = np.broadcast_to(fvals, (mesh.n_vertices,)).copy()
    else:
        fvals = np.broadcast_to(np.asarray(f, dtype=float), (mesh.n_vertices,)).copy()
    cfg = solver or fem.SolverConfig(p=p)
    if cfg.p != p:
        raise ValueError("solver exponent differs from p")
    u, stats = fem.solve_p_laplacian(mesh, fvals, cfg)
    if not stats.converged:
        raise fem.SolverDivergence(f"FEM solve did not converge (residual {stats.final_residual:.3g})")
    avr = domain_avr(domain) if avr is None else float(avr)
    measure = mesh.area
    r_a = float(big_h_inv(N, measure))
    x = np.linspace(0.0, r_a, grid)

    fstar = symmetrized_datum(mesh, fvals, N)
    v = solve_radial_poisson(model(N), r_a, fstar, p)
    vx = v.v(x)
    ustar = fem.distribution_profile(u, N, x)
    scale = float(vx[0])
    tol = MESH_CONSTANT * h_eff * scale
    tal = talenti_compare(ustar, vx, x, avr, p, N, tol)

    rel_tol = MESH_CONSTANT * h_eff
    rs = {"r=1": 1.0, "r=(1+p)/2": 0.5 * (1.0 + p), "r=p": p}
    grads = {k: gradient_lr_check(u.gradient_lp(r), v, avr, r, p, N, rel_tol) for k, r in rs.items()}
    ps = polya_szego_check(u.gradient_lp(p), profile_gradient_energy(x, ustar, p, N), avr, p, N, rel_tol)

    top = float(np.max(np.abs(u.values)))
    tl = top * np.arange(1, levels + 1) / (levels + 1)
    per = fem.superlevel_perimeter(u, tl)
    meas = fem.superlevel_measure(u, tl)
    iso, skipped = isoperimetric_check(per, meas, avr, N)
    tc = top * np.arange(levels) / levels
    lhs, rhs = fem.coarea_sides(u, tc)
    co = coarea_check(lhs, rhs)

    report = ComparisonReport(
        instance={"name": name, "kind": "fem", "domain": _describe(domain), "h": h_eff,
                  "vertices": mesh.n_vertices, "triangles": int(len(mesh.triangles)),
                  "newton_iterations": stats.iterations, "solver_residual": stats.final_residual},
        N=N, p=p, avr=avr, r_a=r_a, domain_measure=measure, scale=scale, talenti=tal,
        gradient_checks=grads, polya_szego=ps, isoperimetric_min_ratio=iso, isoperimetric_tolerance=rel_tol,
        isoperimetric_levels=tl.tolist(), isoperimetric_skipped=skipped, coarea_max_relative_residual=co,
        deficit_scale=_model_lp_norm(x, vx, p, N), equality_tolerance=MESH_CONSTANT * h_eff,
        extras={"max_u": top, "chain_min_ratio": iso},
    )
    report.seconds = time.perf_counter() - start
    report._profiles = {"x": x, "ustar": ustar, "v": vx, "u": u, "radial": v}
    return _finish(report, eq_tol)


def _describe(domain) -> dict:
    if domain is None:
        return {"kind": "mesh"}
    d = asdict(domain)
    d["kind"] = type(domain).__name__.lower()
    return d


# ----------------------------------------------------------- half-line instances


def _check_nonincreasing(datum: Datum, R: float) -> None:
    t = np.linspace(0.0, R, 513)
    vals = datum(t)
    if np.any(vals < 0) or np.any(np.diff(vals) > 1e-12 * max(1.0, float(np.max(np.abs(vals))))):
        raise ValueError("half-line instances need a nonnegative nonincreasing radial datum")


def compare_half_line(space: WeightedHalfLine, R: float = 1.0, f=1.0, p: float = 2.0, *, avr: float | None = None,
                      levels: int = 10, grid: int = 401, eq_tol: float | None = None,
                      name: str = "") -> ComparisonReport:
    """Full comparison on the ball ``[0, R)`` of a weighted half-line.

    The datum must be nonincreasing, so ``u`` is nonincreasing as well and its
    symmetrization is the composition ``u*(x) = u(H^{-1}(H_N(x)))``.  Both
    radial problems are tabulated on node grids containing every radius used
    below, so the comparison itself needs no further root finding.
    """
    start = time.perf_counter()
    N = space.N
    datum = f if isinstance(f, Datum) else (constant(float(f)) if np.isscalar(f) else Datum(f))
    _check_nonincreasing(datum, R)
    if avr is None:
        if space.avr is None:
            from talenti.weighted_space import avr_estimate

            avr = avr_estimate(space, min(1e4, space.t_max))
        else:
            avr = space.avr
    grid += 1 - grid % 2  # odd, for Simpson
    measure = float(space.H(R))
    r_a = float(big_h_inv(N, measure))

    def pull(x):
        """Radius in the space with the same enclosed measure as ``x`` in the model."""
        return np.minimum(space.H_inv(np.minimum(big_h_n(N, x), measure)), R)

    x = np.linspace(0.0, r_a, grid)
    x[-1] = r_a
    rho = pull(x)
    rho[-1] = R
    iso_radii = R * np.arange(1, levels + 1) / (levels + 1)
    co_radii = R * np.arange(1, levels + 1) / levels

    u = solve_radial_poisson(space, R, datum, p, extra_nodes=np.concatenate([rho, iso_radii]))
    if datum.constant is not None:
        fstar = datum
    else:
        fstar = Datum(lambda s: datum(pull(s)))
    v = solve_radial_poisson(model(N), r_a, fstar, p, extra_nodes=x)

    ustar = u.v(rho)
    vx = v.v(x)
    scale = float(vx[0])
    tal = talenti_compare(ustar, vx, x, avr, p, N, HALF_LINE_TOL * max(scale, 1.0))

    rel = HALF_LINE_TOL
    rs = {"r=1": 1.0, "r=(1+p)/2": 0.5 * (1.0 + p), "r=p": p}
    grads = {k: gradient_lr_check(radial_gradient_norms(u, r), v, avr, r, p, N, rel) for k, r in rs.items()}

    # chain rule: (u*)'(x) = u'(rho) h_N(x) / h(rho)
    hx = h_n(N, x)
    hr = space.h(rho)
    du = np.abs(u.dv(rho))
    ratio = np.divide(hx, hr, out=np.zeros_like(hx), where=hr > 0)
    sym_energy = _simpson((du * ratio) ** p * hx, x)
    ps = polya_szego_check(radial_gradient_norms(u, p), sym_energy, avr, p, N, rel)

    # superlevel sets of a nonincreasing u are the balls [0, a)
    top = float(u.v_nodes[0])
    tl = u.v(iso_radii)
    iso, skipped = isoperimetric_check(space.h(iso_radii), space.H(iso_radii), avr, N)
    if top == 0.0:
        iso, skipped = math.inf, list(range(levels))

    # coarea at t = u(a): int_0^a |u'| h against the trapezoid rule for
    # int_t^top Per({u > s}) ds over the node values s = u(rho_j)
    nodes = u.rho
    grad_mass = np.concatenate([[0.0], np.cumsum([_quad_slope_h(u, a, b) for a, b in zip(nodes[:-1], nodes[1:])])])
    per = space.h(nodes)
    seg = 0.5 * (u.v_nodes[:-1] - u.v_nodes[1:]) * (per[1:] + per[:-1])
    tail = np.concatenate([[0.0], np.cumsum(seg)])
    idx = np.searchsorted(nodes, co_radii)
    co = coarea_check(grad_mass[idx], tail[idx])

    report = ComparisonReport(
        instance={"name": name, "kind": "half_line", "space": space.describe(), "R": R},
        N=N, p=p, avr=avr, r_a=r_a, domain_measure=measure, scale=scale, talenti=tal,
        gradient_checks=grads, polya_szego=ps, isoperimetric_min_ratio=iso, isoperimetric_tolerance=1e-9,
        isoperimetric_levels=np.atleast_1d(tl).tolist(), isoperimetric_skipped=skipped,
        coarea_max_relative_residual=co, deficit_scale=_model_lp_norm(x, vx, p, N),
        equality_tolerance=10 * SOLVER_TOL, extras={"max_u": top},
    )
    report.seconds = time.perf_counter() - start
    report._profiles = {"x": x, "ustar": ustar, "v": vx, "u": u, "radial": v}
    return _finish(report, eq_tol)


def _quad_slope_h(u: RadialSolution, a: float, b: float) -> float:
    dens = u.space.density
    return integrate.quad(lambda s: u._slope(s) * float(dens(s)), a, b, epsabs=0.0, epsrel=1e-10, limit=200)[0]
