"""Superlevel sets of P1 functions: exact areas, level-line lengths, rearrangements.

On one triangle a P1 function is affine, so ``{w > t}`` is a triangle or a
triangle with a corner cut off and its area is a closed form in ``t``.  The
level line ``{w = t}`` is a single segment (marching triangles).  Sets
``{|u| > t}`` are handled as ``{u > t} + {-u > t}`` for ``t >= 0``.
"""

from __future__ import annotations

import math

import numpy as np

from talenti.fem.solver import FemFunction
from talenti.model_space import big_h_n
from talenti.rearrangement import MeasuredFunction

_CHUNK = 1 << 20


def _sorted(u: FemFunction, sign: float):
    w = sign * u.values[u.mesh.triangles]
    order = np.argsort(w, axis=1, kind="stable")
    ws = np.take_along_axis(w, order, axis=1)
    xs = np.take_along_axis(u.mesh.vertices[u.mesh.triangles], order[:, :, None], axis=1)
    return ws, xs


def _safe_div(a, b):
    return a / np.where(b == 0, 1.0, b)


def _area_fraction(ws, t):
    """Fraction of each triangle where ``w > t``; ``ws`` sorted, ``t`` shape (k, 1)."""
    w1, w2, w3 = ws[None, :, 0], ws[None, :, 1], ws[None, :, 2]
    lower = 1.0 - _safe_div((t - w1) ** 2, (w2 - w1) * (w3 - w1))
    upper = _safe_div((w3 - t) ** 2, (w3 - w1) * (w3 - w2))
    return np.where(t < w1, 1.0, np.where(t < w2, lower, np.where(t < w3, upper, 0.0)))


def _level_length(ws, xs, t):
    """Length of ``{w = t}`` in each triangle; ``t`` shape (k, 1)."""
    w1, w2, w3 = ws[None, :, 0], ws[None, :, 1], ws[None, :, 2]
    x1, x2, x3 = xs[None, :, 0], xs[None, :, 1], xs[None, :, 2]
    inside = (w1 < t) & (t < w3)
    lam13 = _safe_div(t - w1, w3 - w1)[..., None]
    P = x1 + lam13 * (x3 - x1)
    lam12 = _safe_div(t - w1, w2 - w1)[..., None]
    lam23 = _safe_div(t - w2, w3 - w2)[..., None]
    Q = np.where((t < w2)[..., None], x1 + lam12 * (x2 - x1), x2 + lam23 * (x3 - x2))
    length = np.linalg.norm(P - Q, axis=-1)
    return np.where(inside, length, 0.0)


def _per_level(u: FemFunction, t, kernel, weights=None):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("levels must be >= 0")
    m = len(u.mesh.triangles)
    step = max(1, _CHUNK // max(m, 1))
    out = np.zeros(t.size)
    for sign in (1.0, -1.0):
        ws, xs = _sorted(u, sign)
        if np.all(ws[:, 2] <= 0):
            continue
        for lo in range(0, t.size, step):
            tt = t[lo:lo + step, None]
            vals = kernel(ws, xs, tt)
            if weights is not None:
                vals = vals * weights[None, :]
            out[lo:lo + step] += vals.sum(axis=1)
    return out


def superlevel_measure(u: FemFunction, t):
    """Area of ``{|u| > t}``."""
    out = _per_level(u, t, lambda ws, xs, tt: _area_fraction(ws, tt), u.mesh.cell_areas)
    return out[0] if np.ndim(t) == 0 else out


def superlevel_gradient_integral(u: FemFunction, t):
    """``int_{|u| > t} |grad u|``."""
    out = _per_level(u, t, lambda ws, xs, tt: _area_fraction(ws, tt), u.mesh.cell_areas * u.grad_norm)
    return out[0] if np.ndim(t) == 0 else out


def superlevel_perimeter(u: FemFunction, t):
    """Length of the level line ``{|u| = t}`` inside the domain.

    Parts of ``{|u| > t}`` lying on the mesh boundary are not counted, which is
    the right convention for Neumann sides of a sector and for ``t > 0`` on
    Dirichlet boundaries.
    """
    out = _per_level(u, t, _level_length)
    return out[0] if np.ndim(t) == 0 else out


def fem_to_measured(u: FemFunction) -> MeasuredFunction:
    """One cell per triangle carrying the exact mean of ``|u|`` on it."""
    areas = u.mesh.cell_areas
    total = np.zeros(len(areas))
    for sign in (1.0, -1.0):
        ws, _ = _sorted(u, sign)
        total += _positive_part_mean(ws)
    return MeasuredFunction(total, areas)


def _positive_part_mean(ws):
    """Mean over the triangle of ``max(w, 0)`` for affine ``w`` (sorted nodal values)."""
    w1, w2, w3 = ws[:, 0], ws[:, 1], ws[:, 2]
    zero = np.zeros_like(w1)
    a0 = np.maximum(w1, zero)
    # s in [0, w1): whole triangle
    out = a0.copy()
    # s in [max(w1,0), max(w2,0)): corner at w1 removed
    a, b = a0, np.maximum(w2, zero)
    d = (w2 - w1) * (w3 - w1)
    out += np.where(b > a, (b - a) - _safe_div((b - w1) ** 3 - (a - w1) ** 3, 3.0 * d), 0.0)
    # s in [max(w2,0), max(w3,0)): corner at w3 remains
    a, b = np.maximum(w2, zero), np.maximum(w3, zero)
    d = (w3 - w1) * (w3 - w2)
    out += np.where(b > a, _safe_div((w3 - a) ** 3 - (w3 - b) ** 3, 3.0 * d), 0.0)
    return out


def distribution_profile(u: FemFunction, N: float, x, levels: int = 4000):
    """Schwarz symmetrization ``u*(x)`` of the continuous P1 function ``|u|``.

    The exact distribution function ``mu(t) = |{|u| > t}|`` is tabulated on a
    uniform grid of ``levels`` values of ``t`` in ``[0, max |u|]`` and
    inverted: ``u*(x) = inf{t : mu(t) < H_N(x)}``.
    """
    x = np.asarray(x, dtype=float)
    top = float(np.max(np.abs(u.values)))
    if top == 0.0:
        return np.zeros_like(x)
    t = np.linspace(0.0, top, levels + 1)
    mu = superlevel_measure(u, t)
    mu[-1] = 0.0
    mu = np.minimum.accumulate(mu)
    s = big_h_n(N, x)
    # mu is nonincreasing in t: interpolate t as a function of mu
    return np.interp(s, mu[::-1], t[::-1], left=top, right=0.0)


def coarea_sides(u: FemFunction, t, levels: int = 2000):
    """Both sides of the coarea identity at each level ``t``.

    Returns ``(lhs, rhs)`` with ``lhs = int_{|u|>t} |grad u|`` (exact) and
    ``rhs = int_t^max Per({|u| > r}) dr`` by the trapezoid rule on ``levels``
    subintervals of ``[min t, max |u|]``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lhs = superlevel_gradient_integral(u, t)
    top = float(np.max(np.abs(u.values)))
    if top == 0.0:
        return lhs, np.zeros_like(lhs)
    r = np.unique(np.concatenate([np.linspace(float(t.min()), top, levels + 1), t[t < top]]))
    per = superlevel_perimeter(u, r)
    seg = 0.5 * np.diff(r) * (per[1:] + per[:-1])
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    rhs = np.array([tail[int(np.searchsorted(r, tt))] if tt < top else 0.0 for tt in t])
    return lhs, rhs


def mean_value(u: FemFunction) -> float:
    return math.fsum((u.values[u.mesh.triangles].mean(axis=1) * u.mesh.cell_areas).tolist()) / u.mesh.area
