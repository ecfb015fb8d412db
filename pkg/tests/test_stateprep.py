import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from richhhl import pipeline
from richhhl.statevector import ImpossibleOutcome, StateVector, apply, probability
from richhhl.stateprep import (LoaderConfig, build_loader, choose_c, expand_multilinear,
                               expected_repetitions, exact_loader, fit_polynomial, gate_bound,
                               loaded_state, state_prep_error, success_probability_bound,
                               taylor_envelope)
from richhhl.toeplitz import Problem, RhsSpec, TridiagonalToeplitz, solve_classical

SIM_POLY = (1.0, 1.0, -1.0, 1.0)  # x^3 - x^2 + x + 1, increasing powers


def _eval_direct(poly, x):
    return sum(a * x ** k for k, a in enumerate(poly))


def test_fig1_integer_grid_expansion():
    a0, a1, a2 = 5.0, 3.0, 2.0
    e = expand_multilinear((a0, a1, a2), 2, integer_grid=True)
    q0, q1 = frozenset({0}), frozenset({1})
    assert e.terms[frozenset()] == a0
    assert e.terms[q0] == a2 + a1
    assert e.terms[q1] == 4 * a2 + 2 * a1
    assert e.terms[q0 | q1] == 4 * a2


def test_constant_only_empty_term():
    e = expand_multilinear((1.0,), 3)
    assert e.terms == {frozenset(): 1.0}


def test_identity_poly_three_qubits():
    e = expand_multilinear((0.0, 1.0), 3)
    for i in range(8):
        assert e.evaluate(i) == pytest.approx(i / 7, abs=1e-15)


@settings(max_examples=60)
@given(poly=st.lists(st.floats(-3, 3), min_size=1, max_size=5), n=st.integers(1, 5))
def test_expansion_reproduces_polynomial(poly, n):
    e = expand_multilinear(poly, n)
    N = 2 ** n
    for i in range(N):
        x = i / (N - 1)
        assert abs(e.evaluate(i) - _eval_direct(poly, x)) <= 1e-12 * (1 + sum(abs(a) for a in poly))
    d = len(poly) - 1
    assert e.nonzero_terms() <= sum(math.comb(n, k) for k in range(1, d + 1))


@settings(max_examples=30, deadline=None)
@given(poly=st.lists(st.floats(-1, 1), min_size=1, max_size=4), n=st.integers(1, 4),
       c=st.floats(0.01, 1.0))
def test_loader_amplitude_identity(poly, n, c):
    qc = build_loader(LoaderConfig(tuple(poly), c, n))
    N = 2 ** n
    st_ = apply(qc, StateVector.zero(n + 1))
    x = np.arange(N) / (N - 1)
    target = np.sin(c * _eval_direct(poly, x)) / math.sqrt(N)
    assert np.abs(st_.amps[N:] - target).max() < 1e-10
    if np.any(np.abs(target) > 1e-6):
        p, amps = loaded_state(qc)
        assert np.abs(amps - np.sin(c * _eval_direct(poly, x)) / np.linalg.norm(target * math.sqrt(N))).max() < 1e-10
    d = len(poly) - 1
    meta = qc.metadata
    assert qc.labels["loader_rotations"] == sum(math.comb(n, k) for k in range(0, min(d, n) + 1))
    assert meta["cnot_equivalent"] <= gate_bound(n, d)
    assert meta["cnot_equivalent"] <= 16 * math.e * n ** d


def test_rotation_count_generic():
    # generic coefficients: every subset of size <= d carries a nonzero angle
    qc = build_loader(LoaderConfig((0.3, 0.7, -0.2), 0.5, 4))
    n_ry = qc.metadata["by_kind"]["ry"]
    assert n_ry == sum(math.comb(4, k) for k in range(3))


def test_zero_poly_never_succeeds():
    qc = build_loader(LoaderConfig((0.0,), 0.4, 2))
    s = apply(qc, StateVector.zero(3))
    assert probability(s, {2: 1}) == 0.0
    with pytest.raises(ImpossibleOutcome):
        loaded_state(qc)


def test_simulator_instance_amplitudes():
    p, amps = loaded_state(build_loader(LoaderConfig(SIM_POLY, 0.1, 3)))
    x = np.arange(8) / 7
    ref = np.sin(0.1 * _eval_direct(SIM_POLY, x))
    assert np.abs(amps - ref / np.linalg.norm(ref)).max() < 1e-10


def test_gate_bound_d2_n4():
    assert gate_bound(4, 2) == 136
    qc = build_loader(LoaderConfig((0.1, 0.2, 0.3), 0.5, 4))
    assert qc.metadata["cnot_equivalent"] <= 136


def test_success_bound_uniform():
    for c in (0.05, 0.1, 0.3):
        cfg = LoaderConfig((1.0,), c, 3)
        p, _ = loaded_state(build_loader(cfg))
        bound = success_probability_bound(cfg, math.sqrt(8), 1.0, 0.0)
        assert bound == pytest.approx(c ** 2)
        assert p == pytest.approx(math.sin(c) ** 2, abs=1e-14)
        assert p >= c ** 2 - c ** 4
    assert success_probability_bound(LoaderConfig((1.0,), 1e-9, 3), math.sqrt(8), 1, 0) < 1e-17


def test_success_bound_simulator_instance():
    cfg = LoaderConfig(SIM_POLY, 0.1, 3)
    x = np.arange(8) / 7
    b = _eval_direct(SIM_POLY, x)
    # loader polynomial is p itself, so p_f = p / ||b||_inf up to the scale absorbed in c
    p, _ = loaded_state(build_loader(cfg))
    binf = np.abs(b).max()
    cfg_eff = LoaderConfig(tuple(np.asarray(SIM_POLY) / binf), 0.1 * binf, 3)
    bound = success_probability_bound(cfg_eff, np.linalg.norm(b), binf, 0.0)
    assert p >= bound - 2 * cfg_eff.c ** 4


@settings(max_examples=25, deadline=None)
@given(poly=st.lists(st.floats(0.2, 1.0), min_size=1, max_size=4), c=st.floats(0.02, 0.5),
       n=st.integers(1, 4))
def test_success_bound_property(poly, c, n):
    N = 2 ** n
    x = np.arange(N) / (N - 1)
    vals = _eval_direct(poly, x)
    binf = np.abs(vals).max()
    pf = tuple(np.asarray(poly) / binf)
    cfg = LoaderConfig(pf, c, n)
    p, _ = loaded_state(build_loader(cfg))
    bound = success_probability_bound(cfg, np.linalg.norm(vals), binf, 0.0)
    assert p >= bound - 2 * c ** 4


def test_state_prep_error_bound_kappa_one():
    prob = Problem(TridiagonalToeplitz(3, 1.0, 0.0), RhsSpec(coeffs=[1.0, 0.5, 0.5]), 0.1)
    ov = pipeline.Overrides(c=0.1, exact_evolution=True, exact_inversion=True)
    rr = pipeline.run(pipeline.plan(prob, overrides=ov))
    cls = solve_classical(prob.matrix, prob.rhs)
    cfg = LoaderConfig(tuple(np.array([1.0, 0.5, 0.5]) / cls.norm_b_inf), 0.1, 3)
    bound = state_prep_error(cfg, cls, 0.0)
    assert bound == pytest.approx(4 * math.sqrt(8) * cls.norm_b_inf * 0.01 / cls.norm_b)
    assert rr.combined_error <= bound + 2 * 0.1 ** 4
    assert rr.combined_error > 0


def test_state_prep_error_algebra():
    cls = solve_classical(TridiagonalToeplitz(2, 1.0, 0.0), np.ones(4))
    e1 = state_prep_error(LoaderConfig((1.0,), 0.1, 2), cls, 0.0)
    e2 = state_prep_error(LoaderConfig((1.0,), 0.2, 2), cls, 0.0)
    assert e2 == pytest.approx(4 * e1)
    assert state_prep_error(LoaderConfig((1.0,), 1e-8, 2), cls, 0.0) < 1e-14


def test_fit_exact_polynomial():
    f = lambda x: 2 * x ** 3 - x + 0.5
    fit = fit_polynomial(f, 3, 16)
    assert fit.eps_p <= 1e-12


def test_fit_sine():
    fit = fit_polynomial(np.sin, 7, 64)
    assert fit.eps_p < 1e-6
    x = np.arange(64) / 63
    direct = np.polynomial.polynomial.polyval(x, fit.coeffs) * fit.norm_b_inf
    assert np.abs(direct - np.sin(x)).max() < 1e-6


def test_fit_degree_monotone():
    f = lambda x: np.exp(-3 * x) * np.cos(4 * x) + 2
    errs = [fit_polynomial(f, d, 32).eps_p for d in range(1, 12)]
    for a, b in zip(errs, errs[1:]):
        assert b <= a + 1e-12


def test_fit_against_numpy_chebyshev():
    f = lambda x: np.cos(3 * x) + 2
    fit = fit_polynomial(f, 6, 32)
    ref = np.polynomial.Chebyshev.interpolate(lambda x: f(x) / 3.0, 6, domain=[0, 1])
    x = np.linspace(0, 1, 101)
    assert np.abs(np.polynomial.polynomial.polyval(x, fit.coeffs) - ref(x)).max() < 1e-10


def test_choose_c_and_repetitions():
    eps_p, c = choose_c(0.01, 2.0, 1.5)
    assert eps_p == pytest.approx(0.01 / (8 * 2 * 1.5)) and c == pytest.approx(math.sqrt(eps_p))
    assert expected_repetitions(0.25) == (4.0, 2)
    assert expected_repetitions(0.0) == (math.inf, 0)


def test_exact_loader_amplitudes():
    b = np.array([0.3, -1.0, 0.5, 0.2])
    p, amps = loaded_state(exact_loader(b, 0.5))
    assert np.allclose(amps, b / np.linalg.norm(b), atol=1e-14)
    assert p == pytest.approx(0.25 * np.sum(b ** 2) / 4)


def test_recovered_values_within_envelope():
    c = 0.1
    p, amps = loaded_state(build_loader(LoaderConfig(SIM_POLY, c, 3)))
    x = np.arange(8) / 7
    pv = _eval_direct(SIM_POLY, x)
    rec = np.arcsin(amps * math.sqrt(8 * p)) / c
    assert np.abs(rec - pv).max() < 1e-10  # exact inversion of the sine
    naive = amps * math.sqrt(8 * p) / c  # small-angle readout sin(cp)/c
    assert np.all(np.abs(naive - pv) <= 1.5 * taylor_envelope(pv, c))
