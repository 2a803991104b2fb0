"""Weighted half-lines ``([0, inf), |.|, h(t) dt)``.

These are the concrete curved test spaces: the model space, exact cones
``h = c t^(N-1)``, and perturbed cones that are CD(0, N) without being conic.
The cumulative measure of non-closed-form densities is integrated with
adaptive Gauss-Kronrod quadrature (QUADPACK via scipy) and cached on a
geometric ladder of breakpoints.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from talenti.model_space import _check_dimension, omega_n

QUAD_EPSREL = 1e-12

FAMILIES = ("model", "cone", "perturbed_cone", "modulated_cone", "tabulated")


class _CachedCumulative:
    """``t -> int_0^t h`` with breakpoints at 0, b0, 2 b0, 4 b0, ..."""

    def __init__(self, h: Callable[[float], float], base: float = 0.5):
        self._h = h
        self._base = base
        self._knots = [0.0]
        self._values = [0.0]
        self._lock = threading.Lock()

    def _extend_to(self, t: float) -> None:
        with self._lock:
            while self._knots[-1] < t:
                a = self._knots[-1]
                b = self._base if a == 0.0 else 2.0 * a
                val, _ = integrate.quad(self._h, a, b, epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
                self._values.append(self._values[-1] + val)
                self._knots.append(b)

    def scalar(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        self._extend_to(t)
        k = int(np.searchsorted(self._knots, t, side="right")) - 1
        a = self._knots[k]
        if t == a:
            return self._values[k]
        val, _ = integrate.quad(self._h, a, t, epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
        return self._values[k] + val

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.array([self.scalar(float(x)) for x in t.ravel()]).reshape(t.shape)
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class WeightedHalfLine:
    """A half-line with density ``h`` and cumulative measure ``H``.

    ``avr`` is the analytic asymptotic volume ratio when the family knows it,
    otherwise ``None``.  Instances are immutable; the cumulative cache is
    guarded by a lock so concurrent reads are safe.
    """

    kind: str
    N: float
    params: dict
    density: Callable
    cumulative: Callable
    avr: float | None = None
    t_max: float = math.inf
    _closed_inverse: Callable | None = field(default=None, repr=False)

    def h(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("density evaluated at negative t")
        out = np.asarray(self.density(t), dtype=float)
        return out[()] if out.ndim == 0 else out

    def H(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("cumulative measure evaluated at negative t")
        out = np.asarray(self.cumulative(t), dtype=float)
        return out[()] if out.ndim == 0 else out

    def H_inv(self, a):
        """Radius ``t`` with ``H(t) = a`` (H is strictly increasing)."""
        a = np.asarray(a, dtype=float)
        if np.any(a < 0):
            raise ValueError("H_inv needs a >= 0")
        if self._closed_inverse is not None:
            out = np.asarray(self._closed_inverse(a), dtype=float)
            return out[()] if out.ndim == 0 else out
        out = np.array([self._invert_scalar(float(x)) for x in a.ravel()]).reshape(a.shape)
        return out[()] if out.ndim == 0 else out

    def _invert_scalar(self, a: float) -> float:
        if a == 0.0:
            return 0.0
        hi = 1.0
        while float(self.H(hi)) < a:
            hi *= 2.0
            if hi > self.t_max:
                if float(self.H(self.t_max)) < a:
                    raise ValueError(f"measure {a} exceeds the tabulated range")
                hi = self.t_max
                break
        t = optimize.brentq(lambda t: float(self.H(t)) - a, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        # one Newton polish step, H' = h
        dens = float(self.h(t))
        if dens > 0.0:
            t = min(max(t - (float(self.H(t)) - a) / dens, 0.0), hi)
        return t

    def scaled(self, s: float) -> "WeightedHalfLine":
        """The same space with density ``s * h``."""
        if s <= 0:
            raise ValueError("scale must be positive")
        inv = None
        if self._closed_inverse is not None:
            base_inv = self._closed_inverse
            inv = lambda a: base_inv(np.asarray(a) / s)  # noqa: E731
        return WeightedHalfLine(
            kind=self.kind,
            N=self.N,
            params={**self.params, "scale": s * self.params.get("scale", 1.0)},
            density=lambda t: s * self.density(t),
            cumulative=lambda t: s * self.cumulative(t),
            avr=None if self.avr is None else s * self.avr,
            t_max=self.t_max,
            _closed_inverse=inv,
        )

    def describe(self) -> dict:
        return {"family": self.kind, "N": self.N, "params": dict(self.params)}


def model(N: float) -> WeightedHalfLine:
    N = _check_dimension(N)
    w = omega_n(N)
    return WeightedHalfLine(
        kind="model",
        N=N,
        params={},
        density=lambda t: N * w * np.asarray(t, dtype=float) ** (N - 1.0),
        cumulative=lambda t: w * np.asarray(t, dtype=float) ** N,
        avr=1.0,
        _closed_inverse=lambda a: (np.asarray(a, dtype=float) / w) ** (1.0 / N),
    )


def cone(N: float, c: float) -> WeightedHalfLine:
    """Exact cone ``h = c t^(N-1)``; for ``N = 2`` a sector of opening ``c``."""
    N = _check_dimension(N)
    if not c > 0:
        raise ValueError("cone constant must be positive")
    return WeightedHalfLine(
        kind="cone",
        N=N,
        params={"c": float(c)},
        density=lambda t: c * np.asarray(t, dtype=float) ** (N - 1.0),
        cumulative=lambda t: c / N * np.asarray(t, dtype=float) ** N,
        avr=c / (N * omega_n(N)),
        _closed_inverse=lambda a: (N * np.asarray(a, dtype=float) / c) ** (1.0 / N),
    )


def perturbed_cone(N: float, eps: float) -> WeightedHalfLine:
    """``h_eps(t) = N omega_N (t + eps (1 - e^{-t}))^(N-1)``.

    CD(0, N) for every ``eps >= 0`` (``h^{1/(N-1)}`` is concave), AVR = 1, and
    a cone only at ``eps = 0``.
    """
    N = _check_dimension(N)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    w = omega_n(N)

    def density(t):
        t = np.asarray(t, dtype=float)
        return N * w * (t - eps * np.expm1(-t)) ** (N - 1.0)

    if eps == 0.0:
        base = model(N)
        return WeightedHalfLine("perturbed_cone", N, {"eps": 0.0}, base.density, base.cumulative,
                                1.0, _closed_inverse=base._closed_inverse)
    return WeightedHalfLine(
        kind="perturbed_cone",
        N=N,
        params={"eps": float(eps)},
        density=density,
        cumulative=_CachedCumulative(lambda t: float(density(t))),
        avr=1.0,
    )


def modulated_cone(N: float, a: float) -> WeightedHalfLine:
    """``h(t) = N omega_N t^(N-1) (1 + a e^{-t})``; not CD(0, N) for ``a > 0``."""
    N = _check_dimension(N)
    w = omega_n(N)

    def density(t):
        t = np.asarray(t, dtype=float)
        return N * w * t ** (N - 1.0) * (1.0 + a * np.exp(-t))

    return WeightedHalfLine(
        kind="modulated_cone",
        N=N,
        params={"a": float(a)},
        density=density,
        cumulative=_CachedCumulative(lambda t: float(density(t))),
        avr=1.0,
    )


def tabulated(N: float, t, h) -> WeightedHalfLine:
    """Piecewise-linear density through samples; ``H`` is integrated exactly."""
    N = _check_dimension(N)
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    if t.ndim != 1 or t.shape != h.shape or t.size < 2:
        raise ValueError("need matching 1-D sample arrays with at least two points")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("sample abscissae must start at 0 and increase strictly")
    if not np.all(np.isfinite(h)) or np.any(h < 0) or np.any(h[1:] <= 0):
        raise ValueError("density samples must be finite, >= 0, and > 0 away from t = 0")
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (h[1:] + h[:-1]))])
    t_top = float(t[-1])

    def density(x):
        x = np.asarray(x, dtype=float)
        if np.any(x > t_top):
            raise ValueError("tabulated density evaluated beyond its last sample")
        return np.interp(x, t, h)

    def cumulative(x):
        x = np.asarray(x, dtype=float)
        if np.any(x > t_top):
            raise ValueError("tabulated measure evaluated beyond its last sample")
        k = np.clip(np.searchsorted(t, x, side="right") - 1, 0, t.size - 2)
        dx = x - t[k]
        slope = (h[k + 1] - h[k]) / (t[k + 1] - t[k])
        return cum[k] + h[k] * dx + 0.5 * slope * dx**2

    return WeightedHalfLine("tabulated", N, {"samples": int(t.size)}, density, cumulative,
                            avr=None, t_max=t_top)


def from_config(cfg: dict) -> WeightedHalfLine:
    """Build a space from ``{"family": ..., "N": ..., "params": {...}}``."""
    family = cfg["family"]
    N = cfg["N"]
    params = cfg.get("params", {}) or {}
    if family == "model":
        return model(N)
    if family == "cone":
        return cone(N, params["c"])
    if family == "perturbed_cone":
        return perturbed_cone(N, params["eps"])
    if family == "modulated_cone":
        return modulated_cone(N, params["a"])
    if family == "tabulated":
        return tabulated(N, params["t"], params["h"])
    raise ValueError(f"unknown space family {family!r}")


def measure_of_interval(space: WeightedHalfLine, a: float, b: float) -> float:
    if not 0 <= a <= b:
        raise ValueError(f"need 0 <= a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0
    return float(space.H(b)) - float(space.H(a))


@dataclass(frozen=True)
class CdCheckReport:
    admissible: bool
    worst_second_difference: float
    grid: float
    tolerance: float
    horizon: float

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "worst_second_difference": self.worst_second_difference,
            "grid": self.grid,
            "tolerance": self.tolerance,
            "horizon": self.horizon,
        }


def check_cd0n(space: WeightedHalfLine, grid_step: float = 0.01, horizon: float = 20.0) -> CdCheckReport:
    """Concavity test for ``h^{1/(N-1)}`` by discrete second differences."""
    if grid_step <= 0 or horizon <= 2 * grid_step:
        raise ValueError("need grid_step > 0 and horizon > 2 * grid_step")
    horizon = min(horizon, space.t_max)
    n = int(math.floor(horizon / grid_step + 1e-9))
    t = grid_step * np.arange(n + 1)
    hs = space.h(t)
    if not np.all(np.isfinite(hs)):
        raise ValueError("non-finite density sample")
    phi = hs ** (1.0 / (space.N - 1.0))
    second = phi[:-2] - 2.0 * phi[1:-1] + phi[2:]
    tol = 1e-8 * float(np.max(np.abs(phi)))
    worst = float(np.max(second))
    return CdCheckReport(worst <= tol, worst, grid_step, tol, float(t[-1]))


def _neville_at_zero(x, y) -> float:
    x = list(x)
    p = list(y)
    n = len(x)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i])
    return p[0]


def avr_estimate(space: WeightedHalfLine, r_max: float = 1e4, levels: int = 4) -> float:
    """Extrapolate ``H(r) / (omega_N r^N)`` to ``r -> inf``.

    Ratios on the ladder ``r_max, r_max/2, ...`` are extrapolated in ``1/r``
    (Neville).  A warning is raised if the last two extrapolants disagree.
    """
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    r = r_max / 2.0 ** np.arange(levels)
    ratio = space.H(r) / (omega_n(space.N) * r**space.N)
    est = _neville_at_zero(1.0 / r, ratio)
    prev = _neville_at_zero(1.0 / r[:-1], ratio[:-1]) if levels > 2 else ratio[0]
    if abs(est - prev) > 1e-6 * abs(est):
        warnings.warn(f"AVR extrapolation not stable at r_max={r_max}: {prev} vs {est}", RuntimeWarning)
    return float(est)


def cone_distance_proxy(space: WeightedHalfLine, horizon: float = 10.0, samples: int = 2001) -> float:
    """``min_c sup_{t<=T} |H(t) - c omega_N t^N| / H(T)``.

    A measure-level distance from the nearest cone; zero exactly for cones.
    """
    t = np.linspace(0.0, horizon, samples)
    Hs = space.H(t)
    base = omega_n(space.N) * t**space.N
    scale = Hs[-1]

    def gap(c):
        return float(np.max(np.abs(Hs - c * base))) / scale

    ratios = Hs[1:] / base[1:]
    lo, hi = float(np.min(ratios)), float(np.max(ratios))
    if hi - lo <= 1e-15 * hi:
        return gap(0.5 * (lo + hi))
    res = optimize.minimize_scalar(gap, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-14 * hi, "maxiter": 500})
    return min(float(res.fun), gap(lo), gap(hi))
