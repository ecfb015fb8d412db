"""HHL for tridiagonal Toeplitz systems with Richardson-extrapolated Strang evolution."""

from .mpf import ExtrapolationPlan, MultiProductFormula, build_plan, mpf_coefficients, optimal_l
from .pipeline import Overrides, RunPlan, RunReport, plan, report, run
from .statevector import QuantumCircuit, StateVector
from .toeplitz import Problem, RhsSpec, TridiagonalToeplitz, solve_classical

__all__ = [
    "ExtrapolationPlan", "MultiProductFormula", "Overrides", "Problem", "QuantumCircuit",
    "RhsSpec", "RunPlan", "RunReport", "StateVector", "TridiagonalToeplitz", "build_plan",
    "mpf_coefficients", "optimal_l", "plan", "report", "run", "solve_classical",
]
