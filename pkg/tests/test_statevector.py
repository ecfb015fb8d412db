import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import controlled_gate
from richhhl.statevector import (QFT, Block, Gate, ImpossibleOutcome, QuantumCircuit, StateVector,
                                 UniformRy, apply, circuit_unitary, cnot_cost, marginal, post_select,
                                 probability, sample_counts)


def test_x_flips_zero():
    out = apply(QuantumCircuit(1).add("x", 0), StateVector.zero(1))
    assert np.allclose(out.amps, [0, 1])


def test_hh_is_identity():
    out = apply(QuantumCircuit(1).add("h", 0).add("h", 0), StateVector.zero(1))
    assert abs(abs(out.amps[0]) ** 2 - 1) < 1e-12


def test_ry_amplitudes():
    out = apply(QuantumCircuit(1).add("ry", 0, 2 * math.asin(0.6)), StateVector.zero(1))
    assert np.allclose(out.amps, [0.8, 0.6], atol=1e-14)


def test_post_select_half():
    s = StateVector(1, np.array([1, 1]) / math.sqrt(2))
    p, c = post_select(s, 0, 1)
    assert abs(p - 0.5) < 1e-14 and np.allclose(c.amps, [0, 1])


def test_post_select_impossible():
    with pytest.raises(ImpossibleOutcome, match="impossible-outcome"):
        post_select(StateVector.zero(1), 0, 1)


def test_post_select_ry():
    s = apply(QuantumCircuit(1).add("ry", 0, 2 * math.asin(0.6)), StateVector.zero(1))
    p, c = post_select(s, 0, 1)
    assert abs(p - 0.36) < 1e-14 and np.allclose(c.amps, [0, 1])


def test_sampling_deterministic_state():
    assert sample_counts(StateVector.zero(1), [0], 100, seed=1) == {"0": 100}


def test_sampling_seed_reproducible():
    s = StateVector(2, np.full(4, 0.5))
    assert sample_counts(s, [0, 1], 1000, 7) == sample_counts(s, [0, 1], 1000, 7)


def test_sampling_large_shots():
    s = StateVector(1, np.array([1, 1]) / math.sqrt(2))
    shots = 100_000
    n1 = sample_counts(s, [0], shots, 3).get("1", 0)
    sigma = math.sqrt(shots * 0.25)
    assert abs(n1 - shots / 2) <= 3 * sigma


def test_sampling_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_counts(StateVector.zero(1), [0], 0, 0)


def test_unitary_empty_x_h():
    assert np.allclose(circuit_unitary(QuantumCircuit(2)), np.eye(4))
    assert np.allclose(circuit_unitary(QuantumCircuit(1).add("x", 0)), [[0, 1], [1, 0]])
    h = circuit_unitary(QuantumCircuit(1).add("h", 0))
    assert np.allclose(h, np.array([[1, 1], [1, -1]]) / math.sqrt(2))


def test_unitary_cap():
    with pytest.raises(ValueError):
        circuit_unitary(QuantumCircuit(13))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(QuantumCircuit(2).add("x", 1), StateVector.zero(1))
    with pytest.raises(ValueError):
        QuantumCircuit(2).add("x", 2)


def test_unitary_columns_match_apply():
    qc = QuantumCircuit(3).add("h", 0).add("x", 2, controls=(0,)).add("ry", 1, 0.3, controls=((2, 0),))
    U = circuit_unitary(qc)
    for k in range(8):
        assert np.allclose(U[:, k], apply(qc, StateVector.basis(3, k)).amps)


def test_marginal_and_probability_lsb_order():
    s = StateVector.basis(3, 0b110)
    assert np.allclose(marginal(s, [1, 2]), [0, 0, 0, 1])
    assert np.allclose(marginal(s, [0, 1]), [0, 0, 1, 0])
    assert probability(s, {0: 0, 1: 1, 2: 1}) == 1.0


def test_cnot_cost_table():
    assert cnot_cost(0) == 0
    assert cnot_cost(1, "x") == 1
    assert cnot_cost(2, "x") == 6
    assert [cnot_cost(k) for k in (1, 2, 3)] == [4, 20, 36]


def test_uniform_ry_matches_expansion():
    rng = np.random.default_rng(0)
    angles = rng.uniform(-3, 3, 8)
    op = UniformRy((0, 1, 2), 3, angles)
    a = QuantumCircuit(4).append(op)
    b = QuantumCircuit(4)
    for g in op.expand():
        b.append(g)
    assert np.allclose(circuit_unitary(a), circuit_unitary(b), atol=1e-12)
    assert a.metadata["by_kind"]["ry"] == 8


def test_uniform_ry_with_control():
    angles = np.array([0.3, 1.1])
    op = UniformRy((0,), 1, angles, ((2, 1),))
    a = QuantumCircuit(3).append(op)
    b = QuantumCircuit(3)
    for g in op.expand():
        b.append(g)
    assert np.allclose(circuit_unitary(a), circuit_unitary(b), atol=1e-12)


def test_block_and_qft_ops():
    rng = np.random.default_rng(1)
    M = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    qc = QuantumCircuit(3).append(Block(M, (0, 2), ((1, 1),)))
    U = circuit_unitary(qc)
    # oracle: reorder to (q2 q0) blocks under control q1 = 1
    for k in range(8):
        q0, q1, q2 = k & 1, (k >> 1) & 1, (k >> 2) & 1
        col = U[:, k]
        if q1 == 0:
            assert np.allclose(col, np.eye(8)[:, k])
        else:
            src = q0 | (q2 << 1)
            for dst in range(4):
                j = (dst & 1) | (1 << 1) | ((dst >> 1) << 2)
                assert abs(col[j] - M[dst, src]) < 1e-12
    F = circuit_unitary(QuantumCircuit(3).append(QFT((0, 1, 2))))
    v = np.arange(8)
    assert np.allclose(F, np.exp(2j * np.pi * np.outer(v, v) / 8) / math.sqrt(8))


gate_st = st.tuples(
    st.sampled_from(["x", "h", "ry", "rx", "u1"]),
    st.integers(0, 5),
    st.floats(-math.pi, math.pi, allow_nan=False),
    st.lists(st.tuples(st.integers(0, 5), st.integers(0, 1)), max_size=2),
)


def _build(n, raw):
    qc = QuantumCircuit(n)
    for kind, tgt, th, ctrls in raw:
        tgt %= n
        cs = tuple({q % n: p for q, p in ctrls if q % n != tgt}.items())
        qc.append(Gate(kind, tgt, th, cs))
    return qc


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), raw=st.lists(gate_st, max_size=50))
def test_random_circuits_unitary(n, raw):
    U = circuit_unitary(_build(n, raw))
    assert np.abs(U.conj().T @ U - np.eye(2 ** n)).max() < 1e-10


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 4), raw=st.lists(gate_st, min_size=1, max_size=12))
def test_random_circuits_match_dense_oracle(n, raw):
    qc = _build(n, raw)
    ref = np.eye(2 ** n, dtype=complex)
    for g in qc.ops:
        ref = controlled_gate(n, g.kind, g.target, g.param, g.controls) @ ref
    assert np.allclose(circuit_unitary(qc), ref, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 5), raw=st.lists(gate_st, max_size=30), seed=st.integers(0, 2 ** 16))
def test_norm_preserved_every_gate(n, raw, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    s = StateVector(n, v / np.linalg.norm(v))
    for g in _build(n, raw).ops:
        s = apply(QuantumCircuit(n).append(g), s)
        assert abs(s.norm() - 1) < 1e-12


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_sampling_within_4_sigma(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    s = StateVector(3, v / np.linalg.norm(v))
    shots = 100_000
    counts = sample_counts(s, [0, 1, 2], shots, seed)
    p = s.probabilities()
    for k in range(8):
        got = counts.get(format(k, "03b"), 0)
        sigma = math.sqrt(shots * p[k] * (1 - p[k]))
        assert abs(got - shots * p[k]) <= 4 * sigma + 1e-9
