"""Product-formula simulation of exp(iAt) for tridiagonal Toeplitz A.

A = H1 + H2 + H3 with H1 = a I, H2 = b (I (x) sigma_x) coupling the pairs
(2i, 2i+1), and H3 coupling the remaining neighbours (2i-1, 2i).  Circuits for
H3 use one flag ancilla placed at qubit index ``n_b`` that must start (and
ends) in |1>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .statevector import QuantumCircuit, circuit_unitary
from .toeplitz import TridiagonalToeplitz, exact_evolution


@dataclass(frozen=True)
class ToeplitzDecomposition:
    n_b: int
    a: float
    b: float

    @classmethod
    def of(cls, m: TridiagonalToeplitz) -> "ToeplitzDecomposition":
        return cls(m.n_b, m.a, m.b)

    @property
    def matrix(self) -> TridiagonalToeplitz:
        return TridiagonalToeplitz(self.n_b, self.a, self.b)

    @property
    def N(self) -> int:
        return 2 ** self.n_b

    def h1(self) -> np.ndarray:
        return self.a * np.eye(self.N)

    def h2(self) -> np.ndarray:
        H = np.zeros((self.N, self.N))
        for i in range(0, self.N, 2):
            H[i, i + 1] = H[i + 1, i] = self.b
        return H

    def h3(self) -> np.ndarray:
        H = np.zeros((self.N, self.N))
        for i in range(1, self.N - 1, 2):
            H[i, i + 1] = H[i + 1, i] = self.b
        return H

    def d_norm(self) -> float:
        """max(||H2||, ||H3||); both equal |b| whenever the term is nonzero."""
        return abs(self.b)


@dataclass(frozen=True)
class TrotterParams:
    t: float
    m: int = 1
    k: int = 1

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be >= 1")


def _flagged(n_b: int, flag: bool) -> int:
    return n_b + 1 if flag else n_b


def exp_h1(decomp: ToeplitzDecomposition, t: float, control: int | None = None,
           flag: bool = False) -> QuantumCircuit:
    """exp(i a t) I: a global phase, or U1(a t) on ``control`` when controlled."""
    n = _flagged(decomp.n_b, flag) + (0 if control is None else 1)
    qc = QuantumCircuit(n)
    if decomp.a * t != 0:
        if control is None:
            qc.add("gphase", 0, decomp.a * t)
        else:
            qc.add("u1", control, decomp.a * t)
    return qc


def exp_h2(decomp: ToeplitzDecomposition, t: float, flag: bool = False) -> QuantumCircuit:
    qc = QuantumCircuit(_flagged(decomp.n_b, flag))
    if decomp.b * t != 0:
        qc.add("rx", 0, -2 * decomp.b * t)
    return qc


def _increment(qc: QuantumCircuit, qubits: list[int], controls=()) -> None:
    """|i> -> |i+1 mod 2^n> as a ripple of multi-controlled X gates."""
    for k in range(len(qubits) - 1, -1, -1):
        ctrls = tuple((q, 1) for q in qubits[:k]) + tuple(controls)
        qc.add("x", qubits[k], controls=ctrls)


def _decrement(qc: QuantumCircuit, qubits: list[int], controls=()) -> None:
    for k in range(len(qubits)):
        ctrls = tuple((q, 1) for q in qubits[:k]) + tuple(controls)
        qc.add("x", qubits[k], controls=ctrls)


def exp_h3(decomp: ToeplitzDecomposition, t: float, mode: str = "flag") -> QuantumCircuit:
    """exp(i H3 t) on n_b system qubits plus the flag ancilla (qubit n_b).

    ``mode="flag"``: flag |0> and |N-1>, increment, Rx on q0, decrement.
    ``mode="cblock"``: one block per pair class, CNOT ladder plus a
    multi-controlled Rx; no ancilla use.
    """
    n_b = decomp.n_b
    qc = QuantumCircuit(n_b + 1)
    if n_b == 1 or decomp.b * t == 0:
        return qc
    theta = -2 * decomp.b * t
    sys = list(range(n_b))
    if mode == "flag":
        flag = n_b
        qc.add("x", flag, controls=tuple((q, 1) for q in sys))
        qc.add("x", flag, controls=tuple((q, 0) for q in sys))
        _increment(qc, sys, controls=((flag, 1),))
        qc.add("rx", 0, theta, controls=((flag, 1),))
        _decrement(qc, sys, controls=((flag, 1),))
        qc.add("x", flag, controls=tuple((q, 0) for q in sys))
        qc.add("x", flag, controls=tuple((q, 1) for q in sys))
    elif mode == "cblock":
        for j in range(1, n_b):
            # pairs (i, i+1) where i has exactly j trailing ones
            for q in range(j):
                qc.add("x", q, controls=((j, 1),))
            qc.add("rx", j, theta, controls=tuple((q, 1) for q in range(j)))
            for q in range(j):
                qc.add("x", q, controls=((j, 1),))
    else:
        raise ValueError(f"unknown H3 mode {mode!r}")
    return qc


def flag_block(U: np.ndarray, n_b: int) -> np.ndarray:
    """Restrict a unitary on n_b+1 qubits to the flag=|1> subspace (flag = qubit n_b)."""
    N = 2 ** n_b
    return U[N:, N:]


def strang_circuit(decomp: ToeplitzDecomposition, t: float, m: int,
                   h3_mode: str = "flag", rearranged: bool = True) -> QuantumCircuit:
    """V(t, m) = exp(iH1 t) S1^m(t/m) on n_b qubits plus flag ancilla.

    The rearranged form uses exp(iH2 .) m+2 times instead of 2m.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    tau = t / m
    qc = QuantumCircuit(decomp.n_b + 1)
    qc.extend(exp_h1(decomp, t, flag=True), label="exp_h1")
    if rearranged:
        qc.extend(exp_h2(decomp, tau / 2, flag=True), label="exp_h2")
        for _ in range(m):
            qc.extend(exp_h3(decomp, tau, h3_mode), label="exp_h3")
            qc.extend(exp_h2(decomp, tau, flag=True), label="exp_h2")
        qc.extend(exp_h2(decomp, -tau / 2, flag=True), label="exp_h2")
    else:
        for _ in range(m):
            qc.extend(exp_h2(decomp, tau / 2, flag=True), label="exp_h2")
            qc.extend(exp_h3(decomp, tau, h3_mode), label="exp_h3")
            qc.extend(exp_h2(decomp, tau / 2, flag=True), label="exp_h2")
    return qc


@lru_cache(maxsize=256)
def _step_unitaries(decomp: ToeplitzDecomposition, tau: float, h3_mode: str):
    n_b = decomp.n_b
    u2 = flag_block(circuit_unitary(exp_h2(decomp, tau, flag=True)), n_b)
    u2h = flag_block(circuit_unitary(exp_h2(decomp, tau / 2, flag=True)), n_b)
    u3 = flag_block(circuit_unitary(exp_h3(decomp, tau, h3_mode)), n_b)
    return u2, u2h, u3


def strang_unitary(decomp: ToeplitzDecomposition, t: float, m: int, power: int = 1,
                   h3_mode: str = "flag") -> np.ndarray:
    """Dense V^power(t, m) = exp(iH1 t power) S1^{m power}(t/m).

    Built from the gate-level circuits of one step, then raised to the power.
    """
    tau = t / m
    u2, u2h, u3 = _step_unitaries(decomp, tau, h3_mode)
    step = u2h @ u3 @ u2h
    return np.exp(1j * decomp.a * t * power) * np.linalg.matrix_power(step, m * power)


def trotter_error(decomp: ToeplitzDecomposition, t: float, m: int, k: int = 1) -> float:
    """Measured spectral-norm error ||exp(iAt)^k - V^k(t, m)||."""
    exact = exact_evolution(decomp.matrix, t * k)
    return float(np.linalg.norm(exact - strang_unitary(decomp, t, m, k), 2))


def trotter_error_bound(b: float, t: float, m: int, k: int = 1) -> float:
    """Leading-order error k t^3 |b|^3 / (2 m^2)."""
    return k * t ** 3 * abs(b) ** 3 / (2 * m ** 2)


def m_choice(k: int, t: float, b: float, eps_A: float) -> int:
    """Trotter steps ceil(sqrt(k t^3 |b|^3 / (2 eps_A))), at least 1."""
    if eps_A <= 0:
        raise ValueError("eps_A must be positive")
    return max(1, math.ceil(math.sqrt(k * t ** 3 * abs(b) ** 3 / (2 * eps_A)) - 1e-12))


@dataclass(frozen=True)
class TensorEvolution:
    """exp(i Delta_h t) for the d-dimensional Poisson problem as d identical factors."""

    d_dims: int
    factor: TridiagonalToeplitz
    t_scaled: float  # h^-2 t

    def factor_unitary(self, m: int | None = None) -> np.ndarray:
        if m is None:
            return exact_evolution(self.factor, self.t_scaled)
        return strang_unitary(ToeplitzDecomposition.of(self.factor), self.t_scaled, m)

    def dense(self, m: int | None = None) -> np.ndarray:
        if self.factor.n_b * self.d_dims > 12:
            raise ValueError("dense tensor evolution capped at 12 qubits")
        u = self.factor_unitary(m)
        out = np.ones((1, 1), dtype=complex)
        for _ in range(self.d_dims):
            out = np.kron(out, u)
        return out


def poisson_dd(t: float, d_dims: int, n_b: int) -> TensorEvolution:
    """d_dims parallel copies of exp(i h^-2 A_h t), A_h = tridiag(-1, 2, -1)."""
    if d_dims < 1:
        raise ValueError("d_dims must be >= 1")
    h = 1.0 / (2 ** n_b + 1)
    return TensorEvolution(d_dims, TridiagonalToeplitz(n_b, 2.0, -1.0), t / h ** 2)


def dense_expm(H: np.ndarray, t: float) -> np.ndarray:
    """Oracle-side matrix exponential exp(i H t)."""
    return expm(1j * t * H)
