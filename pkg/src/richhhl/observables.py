"""Observable circuits and scaling laws on the final HHL state.

Two modes are supported. ``post_selected`` conditions on a successful state
preparation first (state-prep ancilla = 1), and ``full_run`` keeps that
ancilla in the measured pattern. The rotation constant is C = lambda_min.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .statevector import ImpossibleOutcome, QuantumCircuit, StateVector, apply, probability


@dataclass(frozen=True)
class Layout:
    """Qubit roles of an HHL circuit; ``prep`` is None when |b> is loaded without an ancilla."""

    system: tuple
    register: tuple
    inv: int
    prep: int | None = None
    flag: int | None = None

    @property
    def n_b(self) -> int:
        return len(self.system)


@dataclass(frozen=True)
class Scales:
    """Problem constants entering the scaling laws."""

    C: float  # lambda_min
    norm_b: float
    norm_b_inf: float
    c: float
    N: int

    def factor(self, mode: str) -> float:
        """Probability-to-(C x_i/...)^2 denominators: ||b||^2 or N ||b||_inf^2 / c^2."""
        if mode == "post_selected":
            return self.norm_b ** 2
        if mode == "full_run":
            return self.N * self.norm_b_inf ** 2 / self.c ** 2
        raise ValueError(f"unknown mode {mode!r}")


@dataclass
class ObservableReport:
    kind: str
    mode: str
    raw: list
    scaled: float
    scaling_factor: float
    shots: int | None = None
    stderr: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["raw"] = [float(r) for r in self.raw]
        return d


def _pattern(layout: Layout, mode: str) -> dict:
    if mode not in ("post_selected", "full_run"):
        raise ValueError(f"unknown mode {mode!r}")
    pat = {layout.inv: 1}
    pat.update({q: 0 for q in layout.register})
    if layout.prep is not None:
        pat[layout.prep] = 1
    elif mode == "full_run":
        raise ValueError("full_run mode needs a state-preparation ancilla")
    return pat


def _prep_probability(state: StateVector, layout: Layout, mode: str) -> float:
    if mode == "post_selected" and layout.prep is not None:
        p = probability(state, {layout.prep: 1})
        if p <= 0:
            raise ImpossibleOutcome("impossible-outcome")
        return p
    return 1.0


def measure_norm(state: StateVector, layout: Layout, scales: Scales,
                 mode: str = "post_selected") -> ObservableReport:
    """P1 = C^2 ||x||^2 / ||b||^2 (or P11 = c^2 C^2 ||x||^2 / (N ||b||_inf^2))."""
    p = probability(state, _pattern(layout, mode)) / _prep_probability(state, layout, mode)
    if p <= 0:
        raise ImpossibleOutcome("impossible-outcome")
    s = math.sqrt(scales.factor(mode)) / scales.C
    return ObservableReport("norm", mode, [p], s * math.sqrt(p), s)


def pair_indices(n_b: int, k: int) -> list[int]:
    """Left indices i of the pairs (i, i+1) read by observable k: i = 2^{k-1} - 1 mod 2^k."""
    N = 2 ** n_b
    return [i for i in range(N - 1) if i % 2 ** k == 2 ** (k - 1) - 1]


def quadratic_observable_circuit(layout: Layout, k: int, n_qubits: int) -> QuantumCircuit:
    """CNOTs from q_{k-1} onto q_0..q_{k-2}, then H on q_{k-1}."""
    sys = layout.system
    qc = QuantumCircuit(n_qubits)
    for j in range(k - 1):
        qc.add("x", sys[j], controls=(sys[k - 1],))
    qc.add("h", sys[k - 1])
    return qc


def measure_quadratic_form(state: StateVector, layout: Layout, scales: Scales, p: float, q: float,
                           mode: str = "post_selected") -> ObservableReport:
    """F_B(x) = x^T B x for B = tridiag(q, p, q), from the norm and n_b difference observables."""
    norm = measure_norm(state, layout, scales, mode)
    base = _pattern(layout, mode)
    pp = _prep_probability(state, layout, mode)
    diffs, n0s, n1s = [], [], []
    for k in range(1, layout.n_b + 1):
        phi = apply(quadratic_observable_circuit(layout, k, state.n_qubits), state)
        pat = dict(base)
        pat.update({layout.system[j]: 1 for j in range(k - 1)})
        n0 = probability(phi, {**pat, layout.system[k - 1]: 0}) / pp
        n1 = probability(phi, {**pat, layout.system[k - 1]: 1}) / pp
        diffs.append(n0 - n1)
        n0s.append(n0)
        n1s.append(n1)
    factor = scales.factor(mode) / scales.C ** 2
    norm_sq = norm.scaled ** 2
    value = p * norm_sq + q * factor * sum(diffs)
    return ObservableReport("quadratic_form", mode, [norm.raw[0]] + diffs, value, factor,
                            extra={"p": p, "q": q, "norm_sq": norm_sq, "n0": n0s, "n1": n1s})


def measure_absolute_average(state: StateVector, layout: Layout, scales: Scales,
                             mode: str = "post_selected") -> ObservableReport:
    """|sum_i x_i| / N from the all-zero probability after H on every system qubit."""
    qc = QuantumCircuit(state.n_qubits)
    for q in layout.system:
        qc.add("h", q)
    phi = apply(qc, state)
    pat = _pattern(layout, mode)
    pat.update({q: 0 for q in layout.system})
    pr = probability(phi, pat) / _prep_probability(state, layout, mode)
    s = math.sqrt(scales.factor(mode)) / (scales.C * math.sqrt(scales.N))
    return ObservableReport("absolute_average", mode, [pr], s * math.sqrt(pr), s)


def _apply_law(kind: str, raw: Sequence[float], template: ObservableReport) -> float:
    if kind in ("norm", "absolute_average"):
        return template.scaling_factor * math.sqrt(max(raw[0], 0.0))
    p, q = template.extra["p"], template.extra["q"]
    norm_sf = math.sqrt(template.scaling_factor)  # ||b||/C or its full-run analogue
    norm_sq = (norm_sf * math.sqrt(max(raw[0], 0.0))) ** 2
    return p * norm_sq + q * template.scaling_factor * sum(raw[1:])


def shot_estimate(report: ObservableReport, shots: int, seed: int) -> ObservableReport:
    """Resample every probability entering the report with ``shots`` binomial trials each.

    Difference observables n(0) - n(1) are drawn as a trinomial (0, 1, other).
    The standard error propagates sqrt(p(1-p)/shots) through the scaling law
    by first-order differentiation.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    raw = list(report.raw)
    est = []
    var = []
    p0 = raw[0]
    k0 = rng.binomial(shots, min(max(p0, 0.0), 1.0))
    est.append(k0 / shots)
    var.append(p0 * (1 - p0) / shots)
    for n0, n1 in zip(report.extra.get("n0", []), report.extra.get("n1", [])):
        dval = n0 - n1
        counts = rng.multinomial(shots, [n0, n1, max(0.0, 1 - n0 - n1)])
        est.append((counts[0] - counts[1]) / shots)
        var.append((n0 + n1 - dval ** 2) / shots)
    value = _apply_law(report.kind, est, report)
    # delta method
    if report.kind in ("norm", "absolute_average"):
        se = report.scaling_factor * math.sqrt(var[0]) / (2 * math.sqrt(p0)) if p0 > 0 else math.inf
    else:
        norm_sf2 = report.scaling_factor
        se = math.sqrt((report.extra["p"] * norm_sf2) ** 2 * var[0]
                       + (report.extra["q"] * report.scaling_factor) ** 2 * sum(var[1:]))
    return ObservableReport(report.kind, report.mode, est, value, report.scaling_factor,
                            shots, se, dict(report.extra))
