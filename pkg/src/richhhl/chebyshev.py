"""Chebyshev interpolation on an interval [lo, hi]."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def nodes(d: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """The d+1 Chebyshev points of the first kind mapped to [lo, hi]."""
    k = np.arange(d + 1)
    u = np.cos((2 * k + 1) * np.pi / (2 * (d + 1)))
    return lo + 0.5 * (u + 1) * (hi - lo)


@dataclass(frozen=True)
class ChebInterpolant:
    lo: float
    hi: float
    coeffs: np.ndarray  # Chebyshev-series coefficients in u = (2x - lo - hi)/(hi - lo)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = (2 * x - self.lo - self.hi) / (self.hi - self.lo)
        # Clenshaw recurrence
        b1 = np.zeros_like(u)
        b2 = np.zeros_like(u)
        for c in self.coeffs[:0:-1]:
            b1, b2 = 2 * u * b1 - b2 + c, b1
        return u * b1 - b2 + self.coeffs[0]

    def monomial(self) -> np.ndarray:
        """Power-basis coefficients in x (increasing order)."""
        cheb = np.polynomial.Chebyshev(self.coeffs, domain=[self.lo, self.hi])
        return cheb.convert(kind=np.polynomial.Polynomial).coef


def interpolate(f: Callable, d: int, lo: float, hi: float) -> ChebInterpolant:
    """Degree-d interpolant of ``f`` at the Chebyshev nodes of [lo, hi]."""
    n = d + 1
    k = np.arange(n)
    theta = (2 * k + 1) * np.pi / (2 * n)
    fx = np.asarray(f(nodes(d, lo, hi)), dtype=float)
    j = np.arange(n)[:, None]
    coeffs = (2.0 / n) * (np.cos(j * theta[None, :]) @ fx)
    coeffs[0] /= 2
    return ChebInterpolant(float(lo), float(hi), coeffs)
