"""Multi-product (Richardson) extrapolation of Strang-split evolutions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hamsim import ToeplitzDecomposition, m_choice, strang_unitary


def mpf_coefficients(m_vec: Sequence[int]) -> np.ndarray:
    """a_j = prod_{q != j} m_j^2 / (m_j^2 - m_q^2)."""
    m = [int(x) for x in m_vec]
    if len(set(m)) != len(m):
        raise ValueError("Trotter exponents must be distinct")
    a = np.empty(len(m))
    for j, mj in enumerate(m):
        prod = 1.0
        for q, mq in enumerate(m):
            if q != j:
                prod *= mj ** 2 / (mj ** 2 - mq ** 2)
        a[j] = prod
    assert abs(a.sum() - 1) < 1e-9, a
    return a


@dataclass(frozen=True)
class MultiProductFormula:
    m_vec: tuple
    a_vec: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "m_vec", tuple(int(m) for m in self.m_vec))
        object.__setattr__(self, "a_vec", mpf_coefficients(self.m_vec))

    @property
    def l(self) -> int:
        return len(self.m_vec)


def lambert_w(x: float, tol: float = 1e-14, max_iter: int = 100) -> float:
    """Principal branch W(x) for x >= 0 by Halley iteration."""
    if x < 0:
        raise ValueError("lambert_w is implemented for x >= 0 only")
    if x == 0:
        return 0.0
    # starting guess: series near 0, log asymptotics for large x
    if x < 1:
        w = x * (1 - x)
    else:
        lx = math.log(x)
        w = lx - math.log(lx) if lx > 1 else lx
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1
        step = f / (ew * wp1 - (w + 2) * f / (2 * wp1))
        w -= step
        if abs(step) <= tol * (1 + abs(w)):
            break
    return w


def optimal_l_raw(d_norm: float, t: float, eps: float) -> float:
    """The unrounded expression ln(2dt/e) / (4 W(ln(2dt/e) / (2e sqrt(4dt))))."""
    L = math.log(2 * d_norm * t / eps)
    return L / (4 * lambert_w(L / (2 * math.e * math.sqrt(4 * d_norm * t))))


def optimal_l(d_norm: float, t: float, eps: float, floor: int = 3) -> int:
    if d_norm * t <= 0 or 2 * d_norm * t / eps <= 1:
        warnings.warn("2 d t / eps <= 1: a single Trotter run suffices, returning l=1")
        return 1
    return max(floor, math.ceil(optimal_l_raw(d_norm, t, eps)))


def mpf_error_bound(d_norm: float, t: float, l: int, m_vec: Sequence[int]) -> float:
    """2 (2dt)^{2l+1} / (2l+1)! * prod 1/m_i^2."""
    prod = 1.0
    for m in m_vec:
        prod /= m ** 2
    return 2 * (2 * d_norm * t) ** (2 * l + 1) / math.factorial(2 * l + 1) * prod


def v_l_matrix(decomp: ToeplitzDecomposition, t: float, m_vec: Sequence[int],
               power: int = 1, alpha: int = 1) -> np.ndarray:
    """sum_j a_j exp(iH1 t k) S1^{k alpha m_j}(t/(alpha m_j)) with k = ``power``."""
    if decomp.n_b > 6:
        raise ValueError("v_l_matrix capped at n_b=6")
    a = mpf_coefficients(m_vec)
    return sum(aj * strang_unitary(decomp, t, alpha * mj, power) for aj, mj in zip(a, m_vec))


def alpha(k: int, l: int, offset: int = 1) -> int:
    """floor(k^{1/2l}) + offset, computed in integers to avoid root round-off."""
    r = int(round(k ** (1.0 / (2 * l))))
    while r ** (2 * l) > k:
        r -= 1
    while (r + 1) ** (2 * l) <= k:
        r += 1
    return r + offset


@dataclass(frozen=True)
class ExtrapolationPlan:
    """Trotter exponents m_j(k) = alpha_k m_j for QPE powers k = 1, 2, ..., 2^{n_l-1}.

    ``alpha_offset`` = 1 is the guaranteed schedule; 0 keeps m_j(1) = m_j
    (only used by presets that pin the first-power exponents).
    """

    m_vec: tuple
    n_l: int
    alpha_offset: int = 1

    @property
    def l(self) -> int:
        return len(self.m_vec)

    @property
    def a_vec(self) -> np.ndarray:
        return mpf_coefficients(self.m_vec)

    @property
    def powers(self) -> list[int]:
        return [2 ** s for s in range(self.n_l)]

    def alpha_k(self, k: int) -> int:
        return alpha(k, self.l, self.alpha_offset)

    def exponents(self, j: int) -> dict[int, int]:
        """Map power k -> m_j(k) for run index j (0-based)."""
        return {k: self.alpha_k(k) * self.m_vec[j] for k in self.powers}

    def table(self) -> list[dict]:
        return [{"k": k, "alpha_k": self.alpha_k(k),
                 "m_k": [self.alpha_k(k) * m for m in self.m_vec]} for k in self.powers]

    def exponent_sum(self) -> int:
        """sum_j sum_k m_j(2^k): Trotter exponents accumulated over all runs."""
        return sum(self.alpha_k(k) * m for k in self.powers for m in self.m_vec)

    def strang_steps(self) -> int:
        """Strang steps actually applied: power k costs k m_j(k) steps."""
        return sum(k * self.alpha_k(k) * m for k in self.powers for m in self.m_vec)


def build_plan(l: int, n_l: int, m_vec: Sequence[int] | None = None,
               alpha_offset: int = 1) -> ExtrapolationPlan:
    if l < 1 or n_l < 1:
        raise ValueError("l and n_l must be >= 1")
    m = tuple(range(1, l + 1)) if m_vec is None else tuple(int(x) for x in m_vec)
    if len(m) != l:
        raise ValueError("m_vec must have l entries")
    mpf_coefficients(m)
    return ExtrapolationPlan(m, n_l, alpha_offset)


def combine_results(values, a_vec: Sequence[float]):
    """sum_j a_j values_j for scalars or equally shaped arrays."""
    a = np.asarray(a_vec, dtype=float)
    vals = [np.asarray(v) for v in values]
    if len(vals) != len(a):
        raise ValueError("need one value per coefficient")
    shape = vals[0].shape
    if any(v.shape != shape for v in vals):
        raise ValueError("dimension mismatch between runs")
    out = sum(aj * v for aj, v in zip(a, vals))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CostComparison:
    extrapolated: float
    plain: float
    closed_form_bound: float
    l: int
    plain_m: tuple


def qpe_cost_model(n_l: int, l: int, G: float, t: float = 1.0, b: float = 1.0,
                   eps_A: float = 1e-4, m_vec: Sequence[int] | None = None) -> CostComparison:
    """Trotter-step totals times G: extrapolated sum_j sum_k G m_j(2^k) vs plain sum_k G m(2^k).

    The plain scheme picks m(2^k) = m_choice(2^k, t, b, eps_A) for each power.
    """
    plan = build_plan(l, n_l, m_vec)
    ext = G * plan.exponent_sum()
    plain_m = tuple(m_choice(k, t, b, eps_A) for k in plan.powers)
    bound = G * (n_l * l ** 2 + 2 ** (n_l / (2 * l)) * l)
    return CostComparison(ext, G * sum(plain_m), bound, l, plain_m)
