"""Constants and profile functions of the one-dimensional model space.

The model space is the half-line ``[0, inf)`` with the Euclidean distance and
the measure ``m_N = N * omega_N * t**(N-1) dt``.  Everything here is a closed
form; the half-line families in :mod:`talenti.weighted_space` reuse them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _check_dimension(N: float) -> float:
    N = float(N)
    if not math.isfinite(N) or N <= 1.0:
        raise ValueError(f"dimension parameter N must be a finite number > 1, got {N!r}")
    return N


@dataclass(frozen=True)
class ModelParams:
    """Dimension ``N`` and exponent ``p`` of a comparison problem.

    The conjugate exponent ``q`` is derived from ``p`` and cannot be passed in.
    """

    N: float
    p: float
    q: float = field(init=False)

    def __post_init__(self):
        N = _check_dimension(self.N)
        p = float(self.p)
        if not math.isfinite(p) or p <= 1.0:
            raise ValueError(f"exponent p must be a finite number > 1, got {self.p!r}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", p / (p - 1.0))


def omega_n(N: float) -> float:
    """Volume of the unit ball in dimension ``N``: ``pi**(N/2) / Gamma(N/2 + 1)``."""
    N = _check_dimension(N)
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)


def h_n(N: float, t):
    """Model density ``N * omega_N * t**(N-1)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("h_n is defined for t >= 0")
    out = N * omega_n(N) * t ** (N - 1.0)
    return out[()] if out.ndim == 0 else out


def big_h_n(N: float, x):
    """Cumulative model measure ``m_N([0, x]) = omega_N * x**N``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("big_h_n is defined for x >= 0")
    out = omega_n(N) * x**N
    return out[()] if out.ndim == 0 else out


def big_h_inv(N: float, a):
    """Radius of the model ball of measure ``a``."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("big_h_inv is defined for a >= 0")
    out = (a / omega_n(N)) ** (1.0 / N)
    return out[()] if out.ndim == 0 else out


def i_n(N: float, sigma):
    """Isoperimetric profile ``h_N(H_N^{-1}(sigma))`` of the model space.

    Evaluated through the closed form ``N * omega_N**(1/N) * sigma**((N-1)/N)``.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("i_n is defined for sigma >= 0")
    out = N * omega_n(N) ** (1.0 / N) * sigma ** ((N - 1.0) / N)
    return out[()] if out.ndim == 0 else out


def isoperimetric_ratio(N: float, perimeter, measure, avr: float = 1.0):
    """``Per / (N omega_N^{1/N} AVR^{1/N} m^{(N-1)/N})``; 1 for optimal sets."""
    measure = np.asarray(measure, dtype=float)
    return np.asarray(perimeter, dtype=float) / (avr ** (1.0 / N) * i_n(N, measure))
