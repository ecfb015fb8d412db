"""Phase estimation of exp(iAt) with exact or Strang-split controlled powers.

Register qubit ``reg[s]`` controls U^{2^s}; after the inverse QFT the register
value ``v`` (``reg[0]`` least significant) estimates N_l lambda t / 2 pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hamsim import ToeplitzDecomposition, strang_circuit, strang_unitary
from .statevector import QFT, Block, QuantumCircuit, StateVector, marginal
from .toeplitz import exact_evolution


@dataclass(frozen=True)
class QPEConfig:
    """``evolution`` is ``"exact"`` or ``"strang"``; in Strang mode ``exponents`` maps
    each power k = 2^s to its Trotter exponent m(k)."""

    n_l: int
    t: float
    evolution: str = "exact"
    exponents: dict = field(default_factory=dict)
    h3_mode: str = "flag"

    def __post_init__(self):
        if self.n_l < 1:
            raise ValueError("n_l must be >= 1")
        if self.evolution not in ("exact", "strang"):
            raise ValueError(f"unknown evolution source {self.evolution!r}")
        if self.evolution == "strang":
            missing = [2 ** s for s in range(self.n_l) if 2 ** s not in self.exponents]
            if missing:
                raise ValueError(f"no Trotter exponent for powers {missing}")

    @property
    def N_l(self) -> int:
        return 2 ** self.n_l

    def check_time(self, lambda_max: float) -> None:
        if not 0 < self.t <= 2 * math.pi / lambda_max * (1 + 1e-12):
            raise ValueError("t must lie in (0, 2 pi / lambda_max]")


def default_time(n_l: int, lambda_max: float) -> float:
    """t = 2 pi (N_l - 1) / (N_l lambda_max): lambda_max lands on register value N_l - 1."""
    N_l = 2 ** n_l
    return 2 * math.pi * (N_l - 1) / (N_l * lambda_max)


def power_unitary(config: QPEConfig, decomp: ToeplitzDecomposition, k: int) -> np.ndarray:
    if config.evolution == "exact":
        return exact_evolution(decomp.matrix, config.t * k)
    return strang_unitary(decomp, config.t, config.exponents[k], k, config.h3_mode)


def build_qpe(config: QPEConfig, decomp: ToeplitzDecomposition, system: Sequence[int],
              register: Sequence[int], n_qubits: int, flag: int | None = None) -> QuantumCircuit:
    """Hadamards, controlled powers, inverse QFT.

    Without ``flag`` every controlled power is one dense :class:`Block`. With a
    flag qubit (which must hold |1>) Strang powers are emitted gate by gate,
    each gate carrying the extra register control.
    """
    if len(register) != config.n_l:
        raise ValueError("register width differs from n_l")
    qc = QuantumCircuit(n_qubits)
    for q in register:
        qc.add("h", q)
    for s, ctrl in enumerate(register):
        k = 2 ** s
        if flag is not None and config.evolution == "strang":
            step = strang_circuit(decomp, config.t, config.exponents[k], config.h3_mode)
            step = step.remapped(list(system) + [flag], n_qubits).controlled(ctrl)
            for _ in range(k):
                qc.extend(step)
            qc.labels[f"power_{k}"] += 1
        else:
            qc.append(Block(power_unitary(config, decomp, k), tuple(system), ((ctrl, 1),),
                            label=f"U^{k}"))
    qc.append(QFT(tuple(register), inverse_=True))
    return qc


def qft_circuit(n: int, inverse: bool = False) -> QuantumCircuit:
    """Gate-level QFT on n qubits: H and controlled-U1 ladder, then a CX-built swap layer.

    Matches the FFT-applied :class:`QFT` (|y> -> N^{-1/2} sum_v e^{2 pi i y v / N} |v>).
    """
    qc = QuantumCircuit(n)
    for j in range(n - 1, -1, -1):
        qc.add("h", j)
        for k in range(j - 1, -1, -1):
            qc.add("u1", j, math.pi / 2 ** (j - k), controls=(k,))
    for i in range(n // 2):
        a, b = i, n - 1 - i
        qc.add("x", b, controls=(a,))
        qc.add("x", a, controls=(b,))
        qc.add("x", b, controls=(a,))
    return qc.inverse() if inverse else qc


def inverse_qft_circuit(n: int) -> QuantumCircuit:
    return qft_circuit(n, inverse=True)


def dft_matrix(n: int) -> np.ndarray:
    N = 2 ** n
    v = np.arange(N)
    return np.exp(2j * np.pi * np.outer(v, v) / N) / math.sqrt(N)


def eigenvalue_histogram(state: StateVector, register: Sequence[int], config: QPEConfig,
                         tol: float = 1e-15) -> dict:
    """Register marginal keyed by the eigenvalue estimate 2 pi v / (N_l t); bins below ``tol`` dropped."""
    probs = marginal(state, register)
    scale = 2 * math.pi / (config.N_l * config.t)
    return {v * scale: float(p) for v, p in enumerate(probs) if p > tol}


def group_peaks(hist: dict, n_peaks: int) -> list[tuple[float, float]]:
    """Assign every bin's mass to the nearest of the ``n_peaks`` heaviest local maxima.

    Returns (peak eigenvalue, grouped mass) pairs sorted by eigenvalue; the
    grouped masses estimate |beta_j|^2 for well-separated eigenvalues.
    """
    lams = sorted(hist)
    p = [hist[x] for x in lams]
    maxima = [i for i in range(len(p))
              if (i == 0 or p[i] >= p[i - 1]) and (i == len(p) - 1 or p[i] >= p[i + 1])]
    peaks = sorted(sorted(maxima, key=lambda i: -p[i])[:n_peaks])
    mass = {i: 0.0 for i in peaks}
    for i, x in enumerate(lams):
        nearest = min(peaks, key=lambda k: abs(lams[k] - x))
        mass[nearest] += p[i]
    return [(lams[i], mass[i]) for i in peaks]
