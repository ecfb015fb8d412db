"""End-to-end HHL runs: parameter derivation, the l extrapolation runs, combination, reports.

Qubit layout (block mode): system 0..n_b-1, state-prep ancilla n_b, eigenvalue
register n_b+1..n_b+n_l, inversion ancilla n_b+n_l+1. Gate-level Strang powers
add the H3 flag ancilla as the last qubit.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import inversion, mpf, observables, qpe, stateprep
from .hamsim import ToeplitzDecomposition, m_choice
from .statevector import (ImpossibleOutcome, QuantumCircuit, StateVector, apply, apply_op,
                          probability)
from .toeplitz import (ClassicalSolution, Problem, RhsSpec, SingularSystem, TridiagonalToeplitz,
                       grid, solve_classical, spectrum_summary)

SPEC_VERSION = "1.0"
DEFAULT_MAX_QUBITS = 16

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Budget:
    eps_S: float
    eps_A: float
    eps_R: float

    @classmethod
    def split(cls, eps: float) -> "Budget":
        return cls(eps / 3, eps / 6, eps / 3)

    @property
    def error_allowance(self) -> float:
        return self.eps_S + 2 * self.eps_A + self.eps_R


@dataclass(frozen=True)
class Overrides:
    """Optional knobs; ``None`` means derive from the error budget."""

    n_l: int | None = None
    t: float | None = None
    l: int | None = None
    m_vec: tuple | None = None
    alpha_offset: int = 1
    no_extrapolation: bool = False
    m1: int | None = None  # plain run with m(k) = ceil(m1 sqrt(k))
    c: float | None = None
    loader_poly: tuple | None = None
    degree: int | None = None
    exact_stateprep: bool = False
    exact_evolution: bool = False
    exact_inversion: bool = False
    rotation: str = "piecewise"  # or "exact_angles"
    prep_ancilla: bool = True
    max_qubits: int = DEFAULT_MAX_QUBITS
    allow_indefinite: bool = False
    h3_mode: str = "flag"


@dataclass
class RunPlan:
    problem: Problem
    epsilon: float
    budget: Budget
    t: float
    n_l: int
    l: int
    runs: list  # per run: dict power -> Trotter exponent, or None for exact evolution
    a_vec: np.ndarray
    loader: stateprep.LoaderConfig | None
    eps_p: float
    inv: inversion.InversionParams
    overrides: Overrides
    extrapolation: mpf.ExtrapolationPlan | None = None
    notes: list = field(default_factory=list)

    @property
    def n_b(self) -> int:
        return self.problem.matrix.n_b

    @property
    def c(self) -> float:
        return self.loader.c if self.loader is not None else 1.0

    @property
    def n_qubits(self) -> int:
        prep = 1 if self.overrides.prep_ancilla else 0
        reg = 0 if self.overrides.exact_inversion else self.n_l
        return self.n_b + prep + reg + 1

    def layout(self) -> observables.Layout:
        nb = self.n_b
        prep = nb if self.overrides.prep_ancilla else None
        base = nb + (1 if prep is not None else 0)
        reg_w = 0 if self.overrides.exact_inversion else self.n_l
        return observables.Layout(tuple(range(nb)), tuple(range(base, base + reg_w)),
                                  base + reg_w, prep)

    def summary(self) -> dict:
        return {
            "n_b": self.n_b, "a": self.problem.matrix.a, "b": self.problem.matrix.b,
            "epsilon": self.epsilon,
            "budget": {"eps_S": self.budget.eps_S, "eps_A": self.budget.eps_A,
                       "eps_R": self.budget.eps_R},
            "t": self.t, "n_l": self.n_l, "derived_n_l": self.inv.derived_n_l, "l": self.l,
            "a_vec": [float(a) for a in self.a_vec],
            "trotter_exponents": [None if r is None else {str(k): m for k, m in r.items()}
                                  for r in self.runs],
            "c": self.c, "eps_p": self.eps_p,
            "inversion": {"C_prime": self.inv.C_prime, "a_start": self.inv.a_start,
                          "fit_start": self.inv.fit_start, "d": self.inv.d,
                          "eps_C": self.inv.eps_C},
            "modes": {"exact_stateprep": self.overrides.exact_stateprep,
                      "exact_evolution": self.overrides.exact_evolution,
                      "exact_inversion": self.overrides.exact_inversion,
                      "rotation": self.overrides.rotation},
            "notes": list(self.notes),
        }


def _loader_for(problem: Problem, classical: ClassicalSolution, kappa: float,
                eps_S: float, ov: Overrides) -> tuple[stateprep.LoaderConfig | None, float]:
    N = problem.matrix.N
    C_b = math.sqrt(N) * classical.norm_b_inf / classical.norm_b
    eps_p_target, c = stateprep.choose_c(eps_S, kappa, C_b)
    if ov.c is not None:
        c = ov.c
    c = min(c, 1.0)
    if ov.loader_poly is not None:
        poly = np.asarray(ov.loader_poly, dtype=float)
    elif problem.rhs.is_poly:
        poly = np.asarray(problem.rhs.coeffs, dtype=float) / classical.norm_b_inf
    else:
        return None, 0.0  # explicit vectors go through the exact-angle loader
    vals = np.polynomial.polynomial.polyval(grid(N), poly)
    eps_p = float(np.abs(vals / np.abs(vals).max() - classical.b / classical.norm_b_inf).max())
    return stateprep.LoaderConfig(tuple(poly), c, problem.matrix.n_b), eps_p


def plan(problem: Problem, epsilon: float | None = None, overrides: Overrides | None = None) -> RunPlan:
    ov = overrides or Overrides()
    eps = problem.epsilon if epsilon is None else epsilon
    A = problem.matrix
    spectrum = spectrum_summary(A)
    if spectrum.lambda_min <= 0 and not ov.allow_indefinite:
        raise ValueError("indefinite spectrum: parameter derivation assumes lambda_min > 0")
    classical = solve_classical(A, problem.rhs)
    budget = Budget.split(eps)
    notes = []

    loader, eps_p = _loader_for(problem, classical, spectrum.kappa, budget.eps_S, ov)

    derived_nl = inversion.derived_n_l(spectrum.kappa, budget.eps_R)
    flag = 1
    cap_nl = ov.max_qubits - A.n_b - (1 if ov.prep_ancilla else 0) - 1 - flag
    n_l = ov.n_l if ov.n_l is not None else derived_nl
    if ov.exact_inversion:
        n_l = ov.n_l if ov.n_l is not None else min(derived_nl, max(cap_nl, 1))
    elif n_l > cap_nl:
        msg = f"n_l={n_l} exceeds the {ov.max_qubits}-qubit cap; clamped to {cap_nl}"
        warnings.warn(msg)
        notes.append(msg)
        n_l = cap_nl
    if n_l < 1:
        raise ValueError("no room for an eigenvalue register under the qubit cap")

    t = ov.t if ov.t is not None else qpe.default_time(n_l, spectrum.lambda_max)
    if t > 2 * math.pi / spectrum.lambda_max * (1 + 1e-12):
        raise ValueError("t exceeds 2 pi / lambda_max")
    inv = inversion.derive_params(spectrum.kappa, budget.eps_R, t, spectrum.lambda_min, n_l=n_l)
    if ov.degree is not None:
        inv = replace(inv, d=ov.degree)
    if inv.C_prime < inv.a_start:
        notes.append("lambda_min maps below a_start; identity region covers it")

    powers = [2 ** s for s in range(n_l)]
    ext = None
    if ov.exact_evolution:
        runs, a_vec, l = [None], np.ones(1), 1
    elif ov.m1 is not None or ov.no_extrapolation:
        if ov.m1 is not None:
            run = {k: math.ceil(ov.m1 * math.sqrt(k) - 1e-12) for k in powers}
        else:
            run = {k: m_choice(k, t, A.b, budget.eps_A) for k in powers}
        runs, a_vec, l = [run], np.ones(1), 1
    else:
        l = ov.l if ov.l is not None else mpf.optimal_l(abs(A.b), t, budget.eps_A)
        if ov.m_vec is not None:
            l = len(ov.m_vec)
        ext = mpf.build_plan(l, n_l, ov.m_vec, ov.alpha_offset)
        runs = [ext.exponents(j) for j in range(l)]
        a_vec = ext.a_vec
    return RunPlan(problem, eps, budget, t, n_l, l, runs, np.asarray(a_vec), loader, eps_p, inv,
                   ov, ext, notes)


# --- execution ---------------------------------------------------------------


@dataclass
class SingleRun:
    solution: np.ndarray  # normalized success-branch system amplitudes (phase fixed)
    raw: np.ndarray  # unnormalized success-branch amplitudes
    p_success: float  # probability of the full success pattern
    p_prep: float
    state: StateVector
    exponents: dict | None
    seconds: float


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude component is real positive."""
    v = np.asarray(v, dtype=complex)
    i = int(np.argmax(np.abs(v)))
    if abs(v[i]) == 0:
        return v
    return v * (abs(v[i]) / v[i])


def _prep_ops(rp: RunPlan, lay: observables.Layout) -> QuantumCircuit:
    n = rp.n_qubits
    classical_b = rp.problem.rhs.vector(rp.problem.matrix.N)
    if lay.prep is None:
        # amplitudes written directly: a Ry tree is unnecessary for the simulator
        return None
    if rp.overrides.exact_stateprep or rp.loader is None:
        circ = stateprep.exact_loader(classical_b, rp.c)
    else:
        circ = stateprep.build_loader(rp.loader)
    return circ.remapped(list(lay.system) + [lay.prep], n)


def execute(rp: RunPlan, run_index: int) -> SingleRun:
    t0 = time.perf_counter()
    lay = rp.layout()
    n = rp.n_qubits
    A = rp.problem.matrix
    decomp = ToeplitzDecomposition.of(A)
    b = rp.problem.rhs.vector(A.N)
    prep = _prep_ops(rp, lay)
    if prep is None:
        amps = np.zeros(2 ** n, dtype=complex)
        amps[: A.N] = b / np.linalg.norm(b)
        state = StateVector(n, amps)
    else:
        state = apply(prep, StateVector.zero(n))
    exps = rp.runs[run_index]
    if rp.overrides.exact_inversion:
        blk = inversion.exact_inversion_block(A.eigenvectors(), A.eigenvalues(),
                                              rp.inv.C, lay.system, lay.inv)
        apply_op(state, blk)
    else:
        cfg = qpe.QPEConfig(rp.n_l, rp.t, "exact" if exps is None else "strang",
                            exps or {}, rp.overrides.h3_mode)
        q = qpe.build_qpe(cfg, decomp, lay.system, lay.register, n)
        state = apply(q, state)
        if rp.overrides.rotation == "exact_angles":
            angles = inversion.exact_angles(rp.inv.C_prime, rp.n_l)
        else:
            pc = inversion.fit_piecewise(rp.inv.C_prime, rp.inv.fit_start, 2 ** rp.n_l, rp.inv.d)
            angles = inversion.rotation_angles(pc, rp.n_l, rp.inv.fit_start)
        apply_op(state, inversion.rotation_circuit_op(angles, lay.register, lay.inv))
        state = apply(q.inverse(), state)
    pattern = {lay.inv: 1, **{r: 0 for r in lay.register}}
    if lay.prep is not None:
        pattern[lay.prep] = 1
    idx = np.zeros(A.N, dtype=np.int64)
    for i in range(A.N):
        full = sum(v << q for q, v in pattern.items())
        idx[i] = full | sum(((i >> k) & 1) << lay.system[k] for k in range(A.n_b))
    raw = state.amps[idx].copy()
    p_succ = float(np.sum(np.abs(raw) ** 2))
    if p_succ <= 0:
        raise ImpossibleOutcome("impossible-outcome")
    p_prep = probability(state, {lay.prep: 1}) if lay.prep is not None else 1.0
    sol = fix_phase(raw / math.sqrt(p_succ))
    return SingleRun(sol, raw, p_succ, p_prep, state, exps, time.perf_counter() - t0)


@dataclass
class RunReport:
    plan: RunPlan
    runs: list
    combined: np.ndarray
    classical: ClassicalSolution
    errors: list  # per-run ||x - x_j||
    combined_error: float
    combined_renormalized_error: float
    observables: dict
    resources: dict

    @property
    def oracle(self) -> np.ndarray:
        return fix_phase(self.classical.x_normalized).real

    def norm_estimates(self) -> list[float]:
        """||x|| per run from the success probability: sqrt(P_success / P_prep) ||b|| / lambda_min."""
        nb = self.classical.norm_b
        return [math.sqrt(r.p_success / r.p_prep) * nb / self.plan.inv.C for r in self.runs]

    def rescaled(self, j: int) -> np.ndarray:
        """Simulator amplitudes times sqrt(N)/c (undoes the loader's c/sqrt(N))."""
        N = self.plan.problem.matrix.N
        return (self.runs[j].raw * math.sqrt(N) / self.plan.c)


def _observable_reports(rp: RunPlan, runs: list, requests: Sequence[dict], classical) -> dict:
    out = {}
    lay = rp.layout()
    A = rp.problem.matrix
    c_eff = rp.c
    if rp.loader is not None and not rp.overrides.exact_stateprep:
        vals = np.polynomial.polynomial.polyval(grid(A.N), np.asarray(rp.loader.poly))
        c_eff = rp.c * float(np.abs(vals).max())
    scales = observables.Scales(rp.inv.C, classical.norm_b, classical.norm_b_inf, c_eff, A.N)
    for req in requests:
        kind = req["kind"]
        mode = req.get("mode", "post_selected")
        per = []
        for r in runs:
            if kind == "norm":
                rep = observables.measure_norm(r.state, lay, scales, mode)
            elif kind == "quadratic_form":
                rep = observables.measure_quadratic_form(r.state, lay, scales, req["p"], req["q"], mode)
            elif kind == "absolute_average":
                rep = observables.measure_absolute_average(r.state, lay, scales, mode)
            else:
                raise ValueError(f"unknown observable {kind!r}")
            if req.get("shots"):
                rep = observables.shot_estimate(rep, int(req["shots"]), int(req.get("seed", 0)))
            per.append(rep)
        combined = mpf.combine_results([p.scaled for p in per], rp.a_vec)
        out[f"{kind}:{mode}"] = {"runs": [p.to_json() for p in per], "combined_raw": combined,
                                 "combined": max(combined, 0.0) if kind != "quadratic_form" else combined}
    return out


def run(rp: RunPlan, observable_requests: Sequence[dict] = (), workers: int = 1) -> RunReport:
    classical = solve_classical(rp.problem.matrix, rp.problem.rhs)
    idx = range(len(rp.runs))
    if workers > 1 and len(rp.runs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(lambda j: execute(rp, j), idx))
    else:
        runs = [execute(rp, j) for j in idx]
    oracle = fix_phase(classical.x_normalized)
    errors = [float(np.linalg.norm(oracle - r.solution)) for r in runs]
    combined = mpf.combine_results([r.solution for r in runs], rp.a_vec)
    comb_err = float(np.linalg.norm(oracle - combined))
    comb_norm_err = float(np.linalg.norm(oracle - combined / np.linalg.norm(combined)))
    obs = _observable_reports(rp, runs, observable_requests, classical)
    resources = _resources(rp, runs)
    return RunReport(rp, runs, combined, classical, errors, comb_err, comb_norm_err, obs, resources)


def _resources(rp: RunPlan, runs: list) -> dict:
    kappa = spectrum_summary(rp.problem.matrix).kappa
    res = {"qubits": rp.n_qubits,
           "qubits_with_flag": rp.n_qubits + 1, "runs": []}
    for r in runs:
        entry = {"p_success": r.p_success, "p_prep": r.p_prep, "seconds": r.seconds}
        if r.exponents is not None:
            entry["trotter_exponents"] = {str(k): m for k, m in r.exponents.items()}
            entry["exponent_sum"] = int(sum(r.exponents.values()))
            entry["strang_steps"] = int(sum(k * m for k, m in r.exponents.items()))
        if rp.loader is not None:
            entry["loader"] = stateprep.build_loader(rp.loader).metadata
        p_cond = r.p_success / r.p_prep if r.p_prep > 0 else 0.0
        entry["repetitions"] = {
            "prep_plain": stateprep.expected_repetitions(r.p_prep)[0],
            "prep_amplified": stateprep.expected_repetitions(r.p_prep)[1],
            "inversion_plain": stateprep.expected_repetitions(p_cond)[0],
            "inversion_amplified_bound": kappa / (1 - rp.budget.eps_R),
        }
        res["runs"].append(entry)
    if rp.extrapolation is not None:
        res["exponent_sum"] = rp.extrapolation.exponent_sum()
        res["strang_steps"] = rp.extrapolation.strang_steps()
    return res


# --- reporting ---------------------------------------------------------------


def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    return o


def report(rr: RunReport, out_dir: str | Path, include_timing: bool = False) -> list[Path]:
    """Write report.json, solution.csv, norms.csv; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rp = rr.plan
    N = rp.problem.matrix.N
    resources = _clean(rr.resources)
    if not include_timing:
        for e in resources["runs"]:
            e.pop("seconds", None)
    doc = {
        "spec_version": SPEC_VERSION,
        "plan": _clean(rp.summary()),
        "classical": {"x": rr.classical.x_raw.tolist(), "x_normalized": rr.oracle.tolist(),
                      "norm_x": rr.classical.norm_x},
        "runs": [{"solution": _clean(r.solution.real), "solution_imag_max": float(np.abs(r.solution.imag).max()),
                  "error": e} for r, e in zip(rr.runs, rr.errors)],
        "combined": {"solution": _clean(np.real(rr.combined)), "error": rr.combined_error,
                     "renormalized_error": rr.combined_renormalized_error},
        "observables": _clean(rr.observables),
        "resources": resources,
    }
    paths = []
    p = out / "report.json"
    p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    paths.append(p)
    p = out / "solution.csv"
    with p.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["i", "classical"] + [f"run_{j + 1}" for j in range(len(rr.runs))] + ["combined"]
        head += [f"rescaled_{j + 1}" for j in range(len(rr.runs))]
        w.writerow(head)
        for i in range(N):
            row = [i, f"{rr.oracle[i]:.12g}"] + [f"{r.solution[i].real:.12g}" for r in rr.runs]
            row += [f"{np.real(rr.combined[i]):.12g}"]
            row += [f"{rr.rescaled(j)[i].real:.12g}" for j in range(len(rr.runs))]
            w.writerow(row)
    paths.append(p)
    p = out / "norms.csv"
    with p.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_index", "norm"])
        est = rr.norm_estimates()
        w.writerow([0, f"{float(np.dot(rp.a_vec, est)):.12g}"])
        # runs listed from the finest to the coarsest base exponent
        for j, v in enumerate(reversed(est)):
            w.writerow([j + 1, f"{v:.12g}"])
    paths.append(p)
    return paths


# --- presets -----------------------------------------------------------------


def simulator_instance() -> Problem:
    """n_b=3, a=2, b=-1/2, rhs p(x) = x^3 - x^2 + x + 1, eps = 2^-5."""
    return Problem(TridiagonalToeplitz(3, 2.0, -0.5), RhsSpec(coeffs=[1, 1, -1, 1]), 2.0 ** -5)


def simulator_overrides(**kw) -> Overrides:
    """Loader p itself with c = 0.1, 14 qubits (n_l = 8), base exponents m(1) = (2, 3, 4)."""
    base = dict(c=0.1, loader_poly=(1.0, 1.0, -1.0, 1.0), n_l=8, m_vec=(2, 3, 4), alpha_offset=0)
    base.update(kw)
    return Overrides(**base)


def theta_rhs(n_b: int, theta: float) -> np.ndarray:
    """Product state Ry(2 theta)^{(x) n_b} |0>."""
    v = np.array([math.cos(theta), math.sin(theta)])
    out = np.ones(1)
    for _ in range(n_b):
        out = np.kron(v, out)
    return out
