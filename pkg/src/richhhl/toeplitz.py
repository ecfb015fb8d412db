"""Tridiagonal symmetric Toeplitz systems: spectrum, classical solves, evolution.

Eigenvalues are indexed ``j = 1..N`` in ``lambda_j = a - 2 b cos(j pi / (N+1))``
with eigenvectors ``u_j(i) = (-1)^i sqrt(2/(N+1)) sin((i+1) j pi / (N+1))`` for
``i = 0..N-1``.  The alternating sign pairs the sine vectors with the
``a - 2b cos`` ordering; the first component is always positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

MAX_EVOLUTION_NB = 10


class SingularSystem(ValueError):
    """Raised when the matrix has a zero eigenvalue."""


@dataclass(frozen=True)
class TridiagonalToeplitz:
    n_b: int
    a: float
    b: float

    def __post_init__(self):
        if self.n_b < 1:
            raise ValueError("n_b must be >= 1")

    @property
    def N(self) -> int:
        return 2 ** self.n_b

    def dense(self) -> np.ndarray:
        N = self.N
        return (self.a * np.eye(N) + self.b * (np.eye(N, k=1) + np.eye(N, k=-1)))

    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues, ordered by index j = 1..N."""
        j = np.arange(1, self.N + 1)
        return self.a - 2 * self.b * np.cos(j * np.pi / (self.N + 1))

    def eigenvectors(self) -> np.ndarray:
        """Columns are the sine-basis eigenvectors in the order of :meth:`eigenvalues`."""
        N = self.N
        i = np.arange(1, N + 1)[:, None]
        j = np.arange(1, N + 1)[None, :]
        sign = np.where(i % 2 == 1, 1.0, -1.0)
        return sign * np.sqrt(2 / (N + 1)) * np.sin(i * j * np.pi / (N + 1))


def eigenvalue(matrix: TridiagonalToeplitz, j: int) -> float:
    if not 1 <= j <= matrix.N:
        raise ValueError(f"eigenvalue index {j} outside [1, {matrix.N}]")
    return matrix.a - 2 * matrix.b * math.cos(j * math.pi / (matrix.N + 1))


@dataclass(frozen=True)
class Spectrum:
    lambda_min: float
    lambda_max: float
    kappa: float


def spectrum_summary(matrix: TridiagonalToeplitz) -> Spectrum:
    lam = matrix.eigenvalues()
    if np.any(np.isclose(lam, 0.0, atol=1e-14)):
        raise SingularSystem("singular-system")
    assert abs(lam).max() <= abs(matrix.a) + 2 * abs(matrix.b) + 1e-12
    lo, hi = float(lam.min()), float(lam.max())
    if lo > 0:
        kappa = hi / lo
    else:
        kappa = float(abs(lam).max() / abs(lam).min())
    return Spectrum(lo, hi, kappa)


@dataclass
class RhsSpec:
    """Right-hand side: explicit values, or a polynomial sampled at x_i = i/(N-1).

    ``coeffs`` are in increasing order of power.
    """

    values: np.ndarray | None = None
    coeffs: Sequence[float] | None = None

    def __post_init__(self):
        if (self.values is None) == (self.coeffs is None):
            raise ValueError("give exactly one of values or coeffs")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float)
            if not np.any(self.values):
                raise ValueError("right-hand side must be nonzero")

    @property
    def is_poly(self) -> bool:
        return self.coeffs is not None

    def vector(self, N: int) -> np.ndarray:
        if self.values is not None:
            if len(self.values) != N:
                raise ValueError(f"rhs has {len(self.values)} entries, system needs {N}")
            return self.values.copy()
        x = grid(N)
        v = np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs, dtype=float))
        if not np.any(v):
            raise ValueError("polynomial vanishes on the grid")
        return v

    def to_json(self) -> dict:
        if self.is_poly:
            return {"type": "poly", "coeffs": [float(c) for c in self.coeffs]}
        return {"type": "vector", "values": [float(v) for v in self.values]}

    @classmethod
    def from_json(cls, d: dict) -> "RhsSpec":
        if d["type"] == "poly":
            return cls(coeffs=[float(c) for c in d["coeffs"]])
        if d["type"] == "vector":
            return cls(values=np.asarray(d["values"], dtype=float))
        raise ValueError(f"unknown rhs type {d['type']!r}")


def grid(N: int) -> np.ndarray:
    return np.arange(N) / (N - 1) if N > 1 else np.zeros(1)


@dataclass
class ClassicalSolution:
    x_raw: np.ndarray
    x_normalized: np.ndarray
    norm_x: float
    norm_b: float
    norm_b_inf: float
    kappa: float
    b: np.ndarray = field(repr=False, default=None)


def thomas(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Thomas algorithm for a tridiagonal system (no pivoting)."""
    n = len(diag)
    c = np.zeros(n)
    d = np.zeros(n)
    denom = diag[0]
    if denom == 0:
        raise SingularSystem("singular-system")
    c[0] = upper[0] / denom if n > 1 else 0.0
    d[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * c[i - 1]
        if denom == 0:
            raise SingularSystem("singular-system")
        c[i] = upper[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def solve_classical(matrix: TridiagonalToeplitz, rhs: RhsSpec | np.ndarray) -> ClassicalSolution:
    spectrum = spectrum_summary(matrix)
    b = rhs.vector(matrix.N) if isinstance(rhs, RhsSpec) else np.asarray(rhs, dtype=float)
    N = matrix.N
    off = np.full(N - 1, matrix.b)
    try:
        x = thomas(off, np.full(N, matrix.a), off, b)
    except SingularSystem:
        # zero pivot on a nonsingular indefinite matrix: fall back to pivoted banded LU
        ab = np.vstack([np.r_[0.0, off], np.full(N, matrix.a), np.r_[off, 0.0]])
        x = solve_banded((1, 1), ab, b)
    nx = float(np.linalg.norm(x))
    return ClassicalSolution(
        x_raw=x,
        x_normalized=x / nx,
        norm_x=nx,
        norm_b=float(np.linalg.norm(b)),
        norm_b_inf=float(np.abs(b).max()),
        kappa=spectrum.kappa,
        b=b,
    )


def exact_evolution(matrix: TridiagonalToeplitz, t: float) -> np.ndarray:
    """Dense ``exp(i A t)`` from the analytic eigendecomposition."""
    if matrix.n_b > MAX_EVOLUTION_NB:
        raise ValueError(f"dense evolution capped at n_b={MAX_EVOLUTION_NB}")
    U = matrix.eigenvectors()
    return (U * np.exp(1j * t * matrix.eigenvalues())) @ U.T


# --- problem files -------------------------------------------------------


@dataclass
class Problem:
    matrix: TridiagonalToeplitz
    rhs: RhsSpec
    epsilon: float = 2.0 ** -5

    def to_json(self) -> dict:
        return {
            "n_b": self.matrix.n_b,
            "a": self.matrix.a,
            "b": self.matrix.b,
            "rhs": self.rhs.to_json(),
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Problem":
        return cls(
            TridiagonalToeplitz(int(d["n_b"]), float(d["a"]), float(d["b"])),
            RhsSpec.from_json(d["rhs"]),
            float(d.get("epsilon", 2.0 ** -5)),
        )


def load_problem(path: str | Path) -> Problem:
    return Problem.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
