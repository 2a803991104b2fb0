"""Distribution functions, decreasing rearrangements and Schwarz symmetrization.

Functions are handled as finite lists of ``(value, cell measure)`` pairs.  The
sign of a value is dropped on ingestion since only ``|u|`` is rearranged.

All three objects built from a :class:`MeasuredFunction` share one array of
cumulative level masses, so equimeasurability and the generalized-inverse laws
hold exactly in floating point, not merely up to rounding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from talenti.model_space import big_h_inv, big_h_n


def _prefix_sums(x: np.ndarray) -> np.ndarray:
    """Neumaier-compensated running sums, forced nondecreasing."""
    out = np.empty(x.size)
    s = 0.0
    c = 0.0
    for i, v in enumerate(x.tolist()):
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i] = s + c
    return np.maximum.accumulate(out)


@dataclass(frozen=True, eq=False)
class MeasuredFunction:
    """``|u|`` sampled on cells of positive measure."""

    values: np.ndarray
    measures: np.ndarray
    total_measure: float = field(init=False)

    def __post_init__(self):
        v = np.abs(np.asarray(self.values, dtype=float)).ravel()
        m = np.asarray(self.measures, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("a measured function needs at least one cell")
        if v.shape != m.shape:
            raise ValueError("values and measures differ in length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(m))):
            raise ValueError("non-finite cell data")
        if np.any(m <= 0):
            raise ValueError("cell measures must be positive")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "measures", m)
        object.__setattr__(self, "total_measure", math.fsum(m.tolist()))

    def __len__(self):
        return self.values.size

    def lp_norm(self, p: float) -> float:
        if math.isinf(p):
            return float(self.values.max())
        return math.fsum((self.values**p * self.measures).tolist()) ** (1.0 / p)

    @classmethod
    def from_csv(cls, path) -> "MeasuredFunction":
        """Read a ``value,measure`` CSV file."""
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"value", "measure"} <= set(reader.fieldnames):
                raise ValueError("CSV must have columns 'value,measure'")
            rows = [(float(r["value"]), float(r["measure"])) for r in reader]
        if not rows:
            raise ValueError("empty CSV")
        vals, meas = zip(*rows)
        return cls(np.array(vals), np.array(meas))

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["value", "measure"])
            for v, m in zip(self.values.tolist(), self.measures.tolist()):
                w.writerow([format(v, ".17g"), format(m, ".17g")])


@dataclass(frozen=True, eq=False)
class _Levels:
    """Distinct values in descending order with the cumulative mass of ``{|u| >= b_k}``."""

    levels: np.ndarray
    cum_mass: np.ndarray
    order: np.ndarray
    level_end: np.ndarray
    total_measure: float


def _levels(u: MeasuredFunction) -> _Levels:
    order = np.argsort(-u.values, kind="stable")
    vals = u.values[order]
    cum = _prefix_sums(u.measures[order])
    # last index of each run of equal values
    last = np.flatnonzero(np.append(vals[1:] != vals[:-1], True))
    return _Levels(vals[last], cum[last], order, last + 1, u.total_measure)


@dataclass(frozen=True, eq=False)
class DistributionFunction:
    """Right-continuous step function ``mu(t) = m({|u| > t})``."""

    breakpoints: np.ndarray
    cum_mass: np.ndarray
    total_measure: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        # number of levels strictly above t (levels are descending)
        k = np.searchsorted(-self.breakpoints, -t, side="left")
        out = np.where(k > 0, self.cum_mass[np.maximum(k - 1, 0)], 0.0)
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class RearrangedFunction:
    """Left-continuous nonincreasing step function ``u#`` on ``[0, m(Omega)]``.

    ``cell_values``/``cell_widths`` keep the sorted cells individually so that
    integrals of ``u#`` sum exactly the same terms as integrals of ``u``.
    """

    levels: np.ndarray
    cum_mass: np.ndarray
    domain_measure: float
    cell_values: np.ndarray
    cell_widths: np.ndarray
    level_end: np.ndarray

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > self.domain_measure):
            raise ValueError("u# is defined on [0, m(Omega)]")
        k = np.searchsorted(self.cum_mass, s, side="left")
        k = np.minimum(k, self.levels.size - 1)
        out = self.levels[k]
        return out[()] if out.ndim == 0 else out

    def integral(self, s: float) -> float:
        """``int_0^s u#`` with a partial final step."""
        if s <= 0:
            return 0.0
        s = min(float(s), self.domain_measure)
        k = min(int(np.searchsorted(self.cum_mass, s, side="left")), self.levels.size - 1)
        if k == 0:
            return float(self.levels[0] * s)
        n = int(self.level_end[k - 1])
        terms = (self.cell_values[:n] * self.cell_widths[:n]).tolist()
        terms.append(self.levels[k] * (s - self.cum_mass[k - 1]))
        return math.fsum(terms)

    def lp_norm(self, p: float) -> float:
        if math.isinf(p):
            return float(self.levels[0])
        return math.fsum((self.cell_values**p * self.cell_widths).tolist()) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class SchwarzSymmetrization:
    """``u*(x) = u#(m_N([0, x]))`` on ``[0, r_a]`` with ``m_N([0, r_a]) = m(Omega)``.

    The superlevel set ``{u* > b_k}`` is the model ball of radius ``radii[k]``;
    its ``m_N``-measure is carried exactly by ``rearranged.cum_mass``.
    """

    rearranged: RearrangedFunction
    N: float
    radii: np.ndarray
    r_a: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("u* is defined on [0, r_a]")
        s = np.minimum(big_h_n(self.N, x), self.rearranged.domain_measure)
        return self.rearranged(s)

    def superlevel_measure(self, t):
        """``m_N({u* > t})`` read off the ball radii."""
        lv = self.rearranged
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(-lv.levels, -t, side="left")
        out = np.where(k > 0, lv.cum_mass[np.maximum(k - 1, 0)], 0.0)
        return out[()] if out.ndim == 0 else out

    def lp_norm(self, p: float) -> float:
        # annulus k has m_N-measure equal to the width of the k-th sorted cell
        return self.rearranged.lp_norm(p)

    def profile(self):
        """Step breakpoints ``(radii, values)``: ``u* = values[k]`` on ``(radii[k-1], radii[k]]``."""
        return self.radii.copy(), self.rearranged.levels.copy()


def distribution_function(u: MeasuredFunction) -> DistributionFunction:
    lv = _levels(u)
    return DistributionFunction(lv.levels, lv.cum_mass, lv.total_measure)


def decreasing_rearrangement(u: MeasuredFunction) -> RearrangedFunction:
    lv = _levels(u)
    cum = lv.cum_mass.copy()
    return RearrangedFunction(
        levels=lv.levels,
        cum_mass=cum,
        domain_measure=lv.total_measure,
        cell_values=u.values[lv.order],
        cell_widths=u.measures[lv.order],
        level_end=lv.level_end,
    )


def schwarz_symmetrize(u: MeasuredFunction, N: float) -> SchwarzSymmetrization:
    r = decreasing_rearrangement(u)
    return SchwarzSymmetrization(r, float(N), big_h_inv(N, r.cum_mass), float(big_h_inv(N, u.total_measure)))


def hardy_littlewood_gap(u: MeasuredFunction, f: MeasuredFunction, E) -> float:
    """``int_0^{m(E)} f# ds - int_E |f| dm`` for a subset ``E`` of the cells.

    ``u`` only fixes the cell structure (typically ``E = {|u| > t}``).  ``E`` is a
    boolean mask or an index array over the cells.
    """
    if len(u) != len(f) or not np.array_equal(u.measures, f.measures):
        raise ValueError("u and f must share the same cells")
    E = np.asarray(E)
    if E.dtype == bool:
        if E.shape != f.values.shape:
            raise ValueError("mask length differs from the number of cells")
        mask = E
    else:
        mask = np.zeros(len(f), dtype=bool)
        mask[E.astype(int)] = True
    mE = math.fsum(f.measures[mask].tolist())
    on_E = math.fsum((f.values[mask] * f.measures[mask]).tolist())
    return decreasing_rearrangement(f).integral(mE) - on_E


def equimeasurability_check(u: MeasuredFunction, N: float) -> float:
    """Largest ``|m({|u| > t}) - m_N({u* > t})|`` over the breakpoints of ``mu``."""
    mu = distribution_function(u)
    star = schwarz_symmetrize(u, N)
    t = np.concatenate([mu.breakpoints, [0.0]])
    return float(np.max(np.abs(mu(t) - star.superlevel_measure(t))))
