"""Deficit-versus-cone-distance sweeps over families of test spaces.

A sweep walks a sorted parameter ladder of one family, computes the Talenti
deficit of every member together with a measure-level distance to the nearest
cone, and checks two qualitative facts: the deficit vanishes at the cone end
of the ladder and it is co-monotone with the distance.

Families
--------
``perturbed_cone``  1-D density ``N omega_N (t - eps expm1(-t))^{N-1}``, parameter ``eps``.
``sector``          1-D cone ``h = theta t^{N-1}`` (the sector of angle ``theta`` for ``N = 2``).
``cone``            1-D cone ``h = c t^{N-1}``, parameter ``c``.
``disk_bump``       FEM on the unit disk with an off-centre Gaussian datum, parameter = offset.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats

from talenti import fem, weighted_space
from talenti.comparison import ComparisonReport, compare_fem, compare_half_line
from talenti.radial_solver import SOLVER_TOL

HALF_LINE_FAMILIES = ("perturbed_cone", "sector", "cone")
FEM_FAMILIES = ("disk_bump",)
DEFICIT_TOL = 10 * SOLVER_TOL


class InadmissibleSpace(ValueError):
    """A family member fails the CD(0,N) check."""

    def __init__(self, param: float, report: weighted_space.CdCheckReport):
        super().__init__(f"member with parameter {param!r} is not CD(0,N): "
                         f"worst second difference {report.worst_second_difference:.3e}")
        self.param = param
        self.report = report


@dataclass(frozen=True)
class SweepSpec:
    family: str
    params: tuple
    N: float = 2.0
    p: float = 2.0
    R: float = 1.0
    f: float = 1.0
    grid: int = 401
    mesh_h: float = 0.025
    bump_width: float = 0.25
    timing: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.family not in HALF_LINE_FAMILIES + FEM_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        params = tuple(float(x) for x in self.params)
        if not params:
            raise ValueError("empty parameter ladder")
        if any(b <= a for a, b in zip(params[:-1], params[1:])):
            raise ValueError("parameter ladder must be strictly increasing")
        if not self.p > 1 or not self.R > 0 or self.f < 0 or self.workers < 1:
            raise ValueError("need p > 1, R > 0, f >= 0 and workers >= 1")
        if self.family in FEM_FAMILIES and self.N != 2:
            raise ValueError("FEM families live in the plane (N = 2)")
        object.__setattr__(self, "params", params)


@dataclass
class SweepRow:
    param: float
    avr: float
    deficit: float
    cone_proxy: float
    equality: bool
    seconds: float = 0.0
    deficit_tol: float = DEFICIT_TOL

    def __post_init__(self):
        if not self.deficit >= 0:
            raise ValueError("deficit must be nonnegative")


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list
    passed: bool
    reasons: list = field(default_factory=list)
    spearman: float | None = None

    CSV_COLUMNS = ("param", "avr", "deficit", "cone_proxy", "equality", "seconds")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            secs = format(r.seconds, ".17g") if self.spec.timing else ""
            w.writerow([format(r.param, ".17g"), format(r.avr, ".17g"), format(r.deficit, ".17g"),
                        format(r.cone_proxy, ".17g"), int(r.equality), secs])
        if path is not None:
            Path(path).write_text(buf.getvalue())
        return buf.getvalue()

    def verdict(self) -> dict:
        return {
            "family": self.spec.family,
            "params": list(self.spec.params),
            "passed": self.passed,
            "verdict": "PASS" if self.passed else "FAIL",
            "reasons": self.reasons,
            "spearman": self.spearman,
            "deficit_tolerance": self.rows[0].deficit_tol if self.rows else DEFICIT_TOL,
            "spec": asdict(self.spec) | {"params": list(self.spec.params)},
        }

    def verdict_json(self, path=None) -> str:
        text = json.dumps(self.verdict(), indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def member_space(family: str, N: float, param: float) -> weighted_space.WeightedHalfLine:
    if family == "perturbed_cone":
        return weighted_space.perturbed_cone(N, param)
    if family in ("sector", "cone"):
        return weighted_space.cone(N, param)
    raise ValueError(f"{family!r} is not a half-line family")


def spearman(a, b) -> float:
    """Spearman rank correlation; exact (integer arithmetic) when there are no ties."""
    ra, rb = stats.rankdata(a), stats.rankdata(b)
    n = len(ra)
    if n < 2:
        return math.nan
    if len(set(ra)) == n and len(set(rb)) == n:
        d2 = sum((int(x) - int(y)) ** 2 for x, y in zip(ra, rb))
        return float(Fraction(n * (n * n - 1) - 6 * d2, n * (n * n - 1)))
    return float(stats.spearmanr(a, b).statistic)


def bump(offset: float, width: float):
    """Gaussian datum on the plane centred at ``(offset, 0)``."""

    def f(x, y):
        return np.exp(-((x - offset) ** 2 + y**2) / (2 * width**2))

    return f


def deficit(instance, R: float = 1.0, f=1.0, p: float = 2.0, **kw) -> float:
    """Talenti deficit of a weighted half-line ball or of a finished report."""
    if isinstance(instance, ComparisonReport):
        return instance.talenti.deficit
    return compare_half_line(instance, R, f, p, **kw).talenti.deficit


def _row(spec: SweepSpec, param: float) -> SweepRow:
    start = time.perf_counter()
    if spec.family in HALF_LINE_FAMILIES:
        space = member_space(spec.family, spec.N, param)
        rep = compare_half_line(space, spec.R, spec.f, spec.p, grid=spec.grid, eq_tol=DEFICIT_TOL)
        proxy = weighted_space.cone_distance_proxy(space)
        tol = DEFICIT_TOL
    else:
        datum = bump(param, spec.bump_width)
        rep = compare_fem(fem.Disk(spec.R), lambda x, y: spec.f * datum(x, y), spec.p, spec.mesh_h, grid=spec.grid)
        proxy = param / spec.R
        tol = rep.equality_tolerance * rep.deficit_scale
    return SweepRow(param, rep.avr, rep.talenti.deficit, proxy, rep.equality_detected,
                    time.perf_counter() - start, tol)


def run_family_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate every member and decide the verdict.

    PASS iff the deficit at the first parameter is within tolerance and the
    deficits are ranked exactly like the cone proxies (Spearman 1).  When the
    whole ladder consists of cones (all proxies zero) every deficit must be
    within tolerance instead.  A one-point ladder passes trivially.
    """
    if spec.family in HALF_LINE_FAMILIES:
        for param in spec.params:
            report = weighted_space.check_cd0n(member_space(spec.family, spec.N, param))
            if not report.admissible:
                raise InadmissibleSpace(param, report)
    if spec.workers > 1 and len(spec.params) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_row, [spec] * len(spec.params), spec.params))
    else:
        rows = [_row(spec, param) for param in spec.params]

    reasons = []
    rho = None
    if len(rows) == 1:
        reasons.append("single-point ladder")
        return SweepResult(spec, rows, True, reasons, None)
    deficits = np.array([r.deficit for r in rows])
    proxies = np.array([r.cone_proxy for r in rows])
    tols = np.array([r.deficit_tol for r in rows])
    passed = True
    if np.all(proxies == 0.0):
        ok = bool(np.all(deficits <= tols))
        reasons.append(f"all members are cones; max deficit {deficits.max():.3e} "
                       f"{'within' if ok else 'above'} tolerance")
        passed = ok
    else:
        if deficits[0] > tols[0]:
            passed = False
            reasons.append(f"deficit at the first parameter {deficits[0]:.3e} exceeds {tols[0]:.3e}")
        rho = spearman(deficits, proxies)
        if not (math.isfinite(rho) and rho == 1.0):
            passed = False
            reasons.append(f"deficit and cone proxy not co-monotone (Spearman {rho:.6f})")
        if np.any(np.diff(deficits) <= 0):
            passed = False
            reasons.append("deficit not strictly increasing along the ladder")
    if passed:
        reasons.append("deficit vanishes at the cone end and grows with the cone proxy")
    return SweepResult(spec, rows, passed, reasons, rho)
