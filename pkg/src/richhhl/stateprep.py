"""Polynomial amplitude loading with the small-angle sine trick.

The loader puts ``sin(c p_f(x_i))`` on the |1> amplitude of an ancilla for
every grid point ``x_i = i/(N-1)``, using one multi-controlled Ry per subset of
system qubits in the multilinear expansion of ``p_f``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import chebyshev
from .statevector import QuantumCircuit, StateVector, UniformRy, apply, post_select
from .toeplitz import ClassicalSolution, grid


@dataclass(frozen=True)
class MultilinearExpansion:
    n: int
    terms: dict  # frozenset of qubit indices -> coefficient

    def evaluate(self, i: int) -> float:
        bits = {k for k in range(self.n) if (i >> k) & 1}
        return float(sum(c for s, c in self.terms.items() if s <= bits))

    def nonzero_terms(self, tol: float = 0.0) -> int:
        return sum(1 for s, c in self.terms.items() if s and abs(c) > tol)


def expand_multilinear(poly: Sequence[float], n: int, integer_grid: bool = False) -> MultilinearExpansion:
    """Substitute x = sum_k q_k 2^k / (2^n - 1) into p and reduce with q_k^2 = q_k.

    ``poly`` holds coefficients in increasing order. With ``integer_grid`` the
    scale is dropped, i.e. x = sum_k q_k 2^k.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    scale = 1.0 if integer_grid else 1.0 / (2 ** n - 1)
    weights = [scale * 2 ** k for k in range(n)]
    deg = len(poly) - 1
    # every subset of size <= deg gets an explicit entry so the gate list is complete
    terms: dict = {frozenset(s): 0.0 for r in range(min(deg, n) + 1)
                   for s in itertools.combinations(range(n), r)}
    power: dict = {frozenset(): 1.0}  # x^0
    for m, a in enumerate(poly):
        if m > 0:
            nxt: dict = {}
            for s, c in power.items():
                for k, w in enumerate(weights):
                    key = s | {k}
                    nxt[key] = nxt.get(key, 0.0) + c * w
            power = nxt
        if a != 0:
            for s, c in power.items():
                terms[s] = terms.get(s, 0.0) + a * c
    return MultilinearExpansion(n, terms)


@dataclass(frozen=True)
class LoaderConfig:
    poly: tuple  # p_f, increasing powers
    c: float
    n_b: int

    def __post_init__(self):
        if not 0 < self.c <= 1:
            raise ValueError("c must lie in (0, 1]")
        object.__setattr__(self, "poly", tuple(float(a) for a in self.poly))

    @property
    def degree(self) -> int:
        return len(self.poly) - 1

    def within_gate_bound(self) -> bool:
        return self.degree <= math.ceil(self.n_b / 2)


def build_loader(config: LoaderConfig) -> QuantumCircuit:
    """H on each system qubit, then one |S|-controlled Ry(2 c coef_S) per subset S.

    The ancilla is qubit ``n_b``.
    """
    n = config.n_b
    exp = expand_multilinear(config.poly, n)
    qc = QuantumCircuit(n + 1)
    for q in range(n):
        qc.add("h", q)
    for s in sorted(exp.terms, key=lambda s: (len(s), sorted(s))):
        qc.add("ry", n, 2 * config.c * exp.terms[s], controls=tuple(sorted(s)))
    qc.labels["loader_rotations"] = len(exp.terms)
    return qc


def gate_bound(n: int, d: int) -> int:
    """Sum_k C(n, k) (16k - 12) over k = 1..d."""
    return sum(math.comb(n, k) * (16 * k - 12) for k in range(1, d + 1))


def exact_loader(values: np.ndarray, c: float = 1.0) -> QuantumCircuit:
    """Reference loader with exact arcsine angles: ancilla amplitude c b_i / ||b||_inf."""
    values = np.asarray(values, dtype=float)
    n = int(round(math.log2(len(values))))
    qc = QuantumCircuit(n + 1)
    for q in range(n):
        qc.add("h", q)
    angles = 2 * np.arcsin(c * values / np.abs(values).max())
    qc.append(UniformRy(tuple(range(n)), n, angles, label="exact_loader"))
    return qc


def loaded_state(circuit: QuantumCircuit) -> tuple[float, np.ndarray]:
    """Run a loader, post-select the ancilla on |1>; returns (probability, system amplitudes)."""
    n = circuit.n_qubits - 1
    p, st = post_select(apply(circuit, StateVector.zero(n + 1)), n, 1)
    return p, st.amps[2 ** n:].real.copy()


def success_probability_bound(config: LoaderConfig, norm_b: float, norm_b_inf: float,
                              eps_p: float) -> float:
    if eps_p < 0:
        raise ValueError("eps_p must be >= 0")
    N = 2 ** config.n_b
    return config.c ** 2 * norm_b ** 2 / (N * norm_b_inf ** 2) - config.c ** 2 * eps_p


def state_prep_error(config: LoaderConfig, classical: ClassicalSolution, eps_p: float) -> float:
    """eps_S = 4 kappa sqrt(N) ||b||_inf (eps_p + c^2) / ||b||."""
    N = 2 ** config.n_b
    return (4 * classical.kappa * math.sqrt(N) * classical.norm_b_inf
            * (eps_p + config.c ** 2) / classical.norm_b)


@dataclass(frozen=True)
class PolyFit:
    coeffs: np.ndarray  # p_f in increasing powers, approximating f/||b||_inf
    eps_p: float  # sup deviation on the grid
    norm_b_inf: float


def fit_polynomial(f: Callable, d: int, N: int) -> PolyFit:
    """Chebyshev interpolation of f/||b||_inf on [0, 1]; eps_p measured on the grid."""
    x = grid(N)
    fx = np.asarray(f(x), dtype=float)
    binf = float(np.abs(fx).max())
    if binf == 0:
        raise ValueError("f vanishes on the grid")
    ip = chebyshev.interpolate(lambda s: np.asarray(f(s), dtype=float) / binf, d, 0.0, 1.0)
    coeffs = ip.monomial()
    eps = float(np.abs(np.polynomial.polynomial.polyval(x, coeffs) - fx / binf).max())
    return PolyFit(coeffs, eps, binf)


def choose_c(eps_S: float, kappa: float, C_b: float) -> tuple[float, float]:
    """(eps_p, c) with eps_p = eps_S/(8 kappa C_b) and c = sqrt(eps_p)."""
    eps_p = eps_S / (8 * kappa * C_b)
    return eps_p, math.sqrt(eps_p)


def expected_repetitions(p: float) -> tuple[float, int]:
    """Repeat-until-success cost: 1/p plainly, ceil(1/sqrt(p)) with amplitude amplification."""
    if p <= 0:
        return math.inf, 0
    return 1.0 / p, math.ceil(1.0 / math.sqrt(p))


def taylor_envelope(p_vals: np.ndarray, c: float) -> np.ndarray:
    """Leading error of sin(c p)/c as an estimate of p: c^2 |p|^3 / 6."""
    return c ** 2 * np.abs(p_vals) ** 3 / 6
