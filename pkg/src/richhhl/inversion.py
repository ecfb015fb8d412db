"""Eigenvalue inversion: piecewise Chebyshev fits of arcsin(C/x) and the conditioned rotation.

All quantities here live in register units: the register value ``v`` stands
for the eigenvalue 2 pi v / (N_l t), and the rotation constant is
C' = N_l t lambda_min / (2 pi).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import chebyshev
from .statevector import Block, UniformRy

log = logging.getLogger(__name__)

GRID_POINTS = 1000


def arcsin_target(C: float):
    """arcsin(C/x) with the argument clamped to 1 (x < C only arises at interval edges)."""

    def f(x):
        arg = C / np.asarray(x, dtype=float)
        if np.any(arg > 1):
            log.debug("clamping arcsin argument for %d points", int(np.sum(arg > 1)))
        return np.arcsin(np.minimum(arg, 1.0))

    return f


def chebyshev_fit(interval: tuple[float, float], d: int, C: float) -> chebyshev.ChebInterpolant:
    lo, hi = interval
    if lo <= 0:
        raise ValueError("interval must lie in x > 0")
    return chebyshev.interpolate(arcsin_target(C), d, lo, hi)


def arcsin_magnitude(x: float) -> float:
    """sqrt(ln^2 r + (pi/2)^2), r = x + sqrt|1 - x^2|, for |x| > 1; plain |arcsin| otherwise."""
    if abs(x) <= 1:
        return abs(math.asin(x))
    r = x + math.sqrt(abs(1 - x * x))
    return math.sqrt(math.log(r) ** 2 + (math.pi / 2) ** 2)


def _r(C: float, a_start: float) -> float:
    y = 2 * C / a_start
    return y + math.sqrt(abs(1 - y * y))


def chebyshev_error_bound(a_start: float, C: float, d: int) -> float:
    if a_start <= 0:
        raise ValueError("a_start must be positive")
    r = _r(C, a_start)
    return 8.13 * math.sqrt(math.log(r) ** 2 + (math.pi / 2) ** 2) / (2 ** (d + 1) - 1)


@dataclass(frozen=True)
class PiecewiseChebyshev:
    C: float
    a_start: float
    N_l: int
    d: int
    fits: tuple  # ChebInterpolant per interval [a_i, 5 a_i]

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return [(f.lo, f.hi) for f in self.fits]

    @property
    def M(self) -> int:
        return len(self.fits)

    def __call__(self, x) -> np.ndarray:
        """Piecewise value for x >= a_start; pi/2 below (identity region)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(x.shape, math.pi / 2)
        for f in self.fits:
            sel = (x >= f.lo) & (x <= f.hi)
            out[sel] = f(x[sel])
        return out

    def sup_errors(self, points: int = GRID_POINTS) -> list[float]:
        target = arcsin_target(self.C)
        errs = []
        for f in self.fits:
            xs = np.linspace(f.lo, f.hi, points)
            errs.append(float(np.abs(f(xs) - target(xs)).max()))
        return errs


def fit_piecewise(C: float, a_start: float, N_l: int, d: int) -> PiecewiseChebyshev:
    """Intervals a_{i+1} = 5 a_i from a_start, M = ceil(log5((N_l - 1)/a_start))."""
    top = N_l - 1
    if a_start >= top:
        return PiecewiseChebyshev(C, a_start, N_l, d, ())
    M = math.ceil(math.log((top) / a_start, 5) - 1e-12)
    fits = tuple(chebyshev_fit((a_start * 5 ** i, a_start * 5 ** (i + 1)), d, C) for i in range(M))
    return PiecewiseChebyshev(C, a_start, N_l, d, fits)


@dataclass(frozen=True)
class InversionParams:
    n_l: int
    eps_R: float
    eps_C: float
    C_prime: float
    C: float
    a_start: float
    d: int
    derived_n_l: int

    @property
    def N_l(self) -> int:
        return 2 ** self.n_l

    @property
    def fit_start(self) -> float:
        """Where fitting begins: arcsin(C'/x) is only real from x = C' on."""
        return max(self.a_start, self.C_prime)


def derived_n_l(kappa: float, eps_R: float) -> int:
    return 3 * (int(math.floor(math.log2(2 * (2 * kappa ** 2 - eps_R) / eps_R + 1))) + 1)


def degree_formula(kappa: float, eps_R: float, C: float, a_start: float) -> int:
    r = _r(C, a_start)
    mag = math.sqrt(math.log(r) ** 2 + (math.pi / 2) ** 2)
    return int(math.floor(math.log2(1 + 16.23 * mag * kappa * (2 * kappa - eps_R) / eps_R)))


def derive_params(kappa: float, eps_R: float, t: float, lambda_min: float,
                  n_l: int | None = None) -> InversionParams:
    """Inversion parameters; ``n_l`` defaults to the derived width and may be overridden."""
    if not 0 < eps_R < 1:
        raise ValueError("eps_R must lie in (0, 1)")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    nl_derived = derived_n_l(kappa, eps_R)
    nl = nl_derived if n_l is None else int(n_l)
    N_l = 2 ** nl
    C_prime = N_l * t * lambda_min / (2 * math.pi)
    a_start = 2 ** (2 * nl / 3)
    eps_C = eps_R / (2 * (2 * kappa ** 2 - eps_R))
    d = degree_formula(kappa, eps_R, C_prime, a_start)
    return InversionParams(nl, eps_R, eps_C, C_prime, lambda_min, a_start, d, nl_derived)


def rotation_angles(pc: PiecewiseChebyshev, n_l: int, fit_start: float | None = None) -> np.ndarray:
    """Ry angles 2 theta_v per register value v.

    theta_v = p_f(v) from ``fit_start`` (default a_start) on, pi/2 for 1 <= v below it
    or wherever C/v >= 1, and 0 for v = 0.
    """
    N_l = 2 ** n_l
    v = np.arange(N_l, dtype=float)
    start = pc.a_start if fit_start is None else fit_start
    theta = np.where((v >= start) & (v > pc.C), pc(v), math.pi / 2)
    theta[0] = 0.0
    return 2 * theta


def exact_angles(C_prime: float, n_l: int) -> np.ndarray:
    """Reference angles 2 arcsin(min(C'/v, 1)), v = 0 untouched."""
    v = np.arange(2 ** n_l, dtype=float)
    theta = np.zeros_like(v)
    theta[1:] = np.arcsin(np.minimum(C_prime / v[1:], 1.0))
    return 2 * theta


def rotation_circuit_op(angles: np.ndarray, register, ancilla: int, controls=()) -> UniformRy:
    return UniformRy(tuple(register), ancilla, np.asarray(angles, dtype=float), controls,
                     label="eigen_rotation")


def success_probability(kappa: float, eps_R: float) -> float:
    if eps_R >= 1:
        raise ValueError("eps_R must be < 1")
    return ((1 - eps_R) / kappa) ** 2


def exact_inversion_block(eigvecs: np.ndarray, eigvals: np.ndarray, C: float,
                          system, ancilla: int, controls=()) -> Block:
    """Rotate the ancilla by arcsin(C/lambda_j) in each eigenspace (QPE bypassed)."""
    N = len(eigvals)
    M = np.zeros((2 * N, 2 * N), dtype=complex)
    for j in range(N):
        th = math.asin(min(C / eigvals[j], 1.0))
        ry = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        M += np.kron(ry, np.outer(eigvecs[:, j], eigvecs[:, j]))
    return Block(M, tuple(system) + (ancilla,), controls, label="exact_inversion")


def horner_toffoli_cost(n_l: int, d: int, M: int) -> dict:
    """Reported, not built: O(n_l^2 d + M d log M) Toffolis and (d+1) n_l + ceil(log M) + 1 qubits."""
    logM = math.log2(M) if M > 1 else 0.0
    return {"toffoli_scale": n_l ** 2 * d + M * d * logM,
            "qubits": (d + 1) * n_l + math.ceil(logM) + 1}
