"""Dense statevector simulation of (multi-)controlled single-qubit circuits.

Qubit 0 is the least significant bit of a basis-state index, so basis state
``i`` has qubit ``k`` equal to ``(i >> k) & 1``.

Besides single-qubit gates a circuit may hold three structural operations:

* :class:`Block` -- a dense unitary on a few target qubits (used for
  controlled Hamiltonian-simulation powers),
* :class:`QFT` -- a (inverse) Fourier transform on a register, applied by FFT,
* :class:`UniformRy` -- a family of register-conditioned Ry rotations, one per
  register value, which is the product of ``2**r`` multi-controlled Ry gates.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

MAX_UNITARY_QUBITS = 12
MAX_STATE_QUBITS = 26

_KINDS = ("x", "h", "ry", "rx", "u1", "gphase")


class ImpossibleOutcome(ValueError):
    """Raised when post-selecting on an outcome of zero probability."""


Controls = tuple[tuple[int, int], ...]


def _norm_controls(controls) -> Controls:
    out = []
    for c in controls:
        if isinstance(c, (int, np.integer)):
            out.append((int(c), 1))
        else:
            q, pol = c
            out.append((int(q), int(bool(pol))))
    return tuple(out)


@dataclass(frozen=True)
class Gate:
    """Single-qubit gate with optional positive/negative controls."""

    kind: str
    target: int
    param: float = 0.0
    controls: Controls = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "controls", _norm_controls(self.controls))
        cq = [q for q, _ in self.controls]
        if self.target in cq or len(set(cq)) != len(cq):
            raise ValueError("target and controls must be distinct qubits")

    def matrix(self) -> np.ndarray:
        th = self.param
        if self.kind == "x":
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if self.kind == "h":
            return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        if self.kind == "ry":
            c, s = np.cos(th / 2), np.sin(th / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "rx":
            c, s = np.cos(th / 2), np.sin(th / 2)
            return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
        if self.kind == "u1":
            return np.array([[1, 0], [0, np.exp(1j * th)]], dtype=complex)
        return np.exp(1j * th) * np.eye(2, dtype=complex)

    def inverse(self) -> "Gate":
        if self.kind in ("x", "h"):
            return self
        return Gate(self.kind, self.target, -self.param, self.controls)

    def with_control(self, qubit: int, polarity: int = 1) -> "Gate":
        return Gate(self.kind, self.target, self.param, self.controls + ((qubit, polarity),))

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) + tuple(q for q, _ in self.controls)


@dataclass(frozen=True, eq=False)
class Block:
    """Dense unitary on ``targets`` (``targets[0]`` is the matrix LSB)."""

    matrix: np.ndarray
    targets: tuple[int, ...]
    controls: Controls = ()
    label: str = "block"

    def __post_init__(self):
        object.__setattr__(self, "controls", _norm_controls(self.controls))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        dim = 2 ** len(self.targets)
        if self.matrix.shape != (dim, dim):
            raise ValueError("block matrix does not match target count")

    def inverse(self) -> "Block":
        return Block(self.matrix.conj().T, self.targets, self.controls, self.label + "_dg")

    def with_control(self, qubit: int, polarity: int = 1) -> "Block":
        return Block(self.matrix, self.targets, self.controls + ((qubit, polarity),), self.label)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)


@dataclass(frozen=True)
class QFT:
    """Fourier transform on ``qubits`` (``qubits[0]`` least significant).

    Forward: |y> -> N^{-1/2} sum_v exp(+2 pi i y v / N) |v>.
    """

    qubits: tuple[int, ...]
    inverse_: bool = False
    controls: Controls = ()

    def inverse(self) -> "QFT":
        return QFT(self.qubits, not self.inverse_, self.controls)

    def with_control(self, qubit: int, polarity: int = 1) -> "QFT":
        return QFT(self.qubits, self.inverse_, _norm_controls(self.controls) + ((qubit, polarity),))


@dataclass(frozen=True, eq=False)
class UniformRy:
    """Ry(angles[v]) on ``target`` conditioned on ``register`` holding ``v``."""

    register: tuple[int, ...]
    target: int
    angles: np.ndarray
    controls: Controls = ()
    label: str = "uniform_ry"

    def __post_init__(self):
        object.__setattr__(self, "controls", _norm_controls(self.controls))
        object.__setattr__(self, "register", tuple(int(q) for q in self.register))
        if len(self.angles) != 2 ** len(self.register):
            raise ValueError("need one angle per register value")

    def inverse(self) -> "UniformRy":
        return UniformRy(self.register, self.target, -np.asarray(self.angles), self.controls, self.label)

    def with_control(self, qubit: int, polarity: int = 1) -> "UniformRy":
        return UniformRy(self.register, self.target, self.angles,
                         self.controls + ((qubit, polarity),), self.label)

    def expand(self) -> list[Gate]:
        """The equivalent list of multi-controlled Ry gates (zero angles skipped)."""
        gates = []
        for v, th in enumerate(self.angles):
            if th == 0.0:
                continue
            ctrls = tuple((q, (v >> i) & 1) for i, q in enumerate(self.register))
            gates.append(Gate("ry", self.target, float(th), ctrls + self.controls))
        return gates


Op = Union[Gate, Block, QFT, UniformRy]


def op_qubits(op: Op) -> tuple[int, ...]:
    if isinstance(op, Gate):
        qs = op.qubits
    elif isinstance(op, Block):
        qs = op.qubits
    elif isinstance(op, QFT):
        qs = tuple(op.qubits)
    else:
        qs = op.register + (op.target,)
    return qs + tuple(q for q, _ in getattr(op, "controls", ()) if q not in qs)


def cnot_cost(n_controls: int, kind: str = "ry") -> int:
    """Upper-bound CNOT count of a single-qubit gate with ``n_controls`` controls.

    Uses at most 16k-12 CNOTs for k >= 1 controls; plain CNOT and Toffoli use
    their textbook counts.
    """
    if n_controls == 0:
        return 0
    if kind == "x" and n_controls == 1:
        return 1
    if kind == "x" and n_controls == 2:
        return 6
    return 16 * n_controls - 12


@dataclass
class QuantumCircuit:
    n_qubits: int
    ops: list = field(default_factory=list)
    labels: Counter = field(default_factory=Counter)

    def append(self, op: Op) -> "QuantumCircuit":
        for q in op_qubits(op):
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"qubit {q} outside circuit of {self.n_qubits} qubits")
        self.ops.append(op)
        return self

    def add(self, kind: str, target: int, param: float = 0.0, controls=()) -> "QuantumCircuit":
        return self.append(Gate(kind, target, param, controls))

    def extend(self, other: "QuantumCircuit", label: str | None = None) -> "QuantumCircuit":
        for op in other.ops:
            self.append(op)
        self.labels.update(other.labels)
        if label is not None:
            self.labels[label] += 1
        return self

    def inverse(self) -> "QuantumCircuit":
        inv = QuantumCircuit(self.n_qubits, [op.inverse() for op in reversed(self.ops)])
        inv.labels = Counter(self.labels)
        return inv

    def controlled(self, qubit: int, polarity: int = 1, n_qubits: int | None = None) -> "QuantumCircuit":
        """Promote every operation to carry one more control."""
        out = QuantumCircuit(n_qubits or self.n_qubits)
        for op in self.ops:
            out.append(op.with_control(qubit, polarity))
        out.labels = Counter(self.labels)
        return out

    def remapped(self, mapping: Sequence[int], n_qubits: int) -> "QuantumCircuit":
        """Relabel qubit ``q`` as ``mapping[q]`` inside a wider circuit."""
        m = list(mapping)

        def rc(ctrls):
            return tuple((m[q], p) for q, p in ctrls)

        out = QuantumCircuit(n_qubits)
        for op in self.ops:
            if isinstance(op, Gate):
                out.append(Gate(op.kind, m[op.target], op.param, rc(op.controls)))
            elif isinstance(op, Block):
                out.append(Block(op.matrix, tuple(m[t] for t in op.targets), rc(op.controls), op.label))
            elif isinstance(op, QFT):
                out.append(QFT(tuple(m[q] for q in op.qubits), op.inverse_, rc(op.controls)))
            else:
                out.append(UniformRy(tuple(m[q] for q in op.register), m[op.target], op.angles,
                                     rc(op.controls), op.label))
        out.labels = Counter(self.labels)
        return out

    @property
    def metadata(self) -> dict:
        """Gate counts per kind, per control arity and CNOT-equivalent total."""
        by_kind: Counter = Counter()
        by_arity: Counter = Counter()
        cnots = 0
        for op in self.ops:
            if isinstance(op, Gate):
                k = len(op.controls)
                by_kind[op.kind] += 1
                by_arity[k] += 1
                cnots += cnot_cost(k, op.kind)
            elif isinstance(op, UniformRy):
                k = len(op.register) + len(op.controls)
                n = int(np.count_nonzero(op.angles))
                by_kind["ry"] += n
                by_arity[k] += n
                cnots += n * cnot_cost(k)
            elif isinstance(op, Block):
                by_kind["block"] += 1
            else:
                by_kind["qft"] += 1
        return {
            "by_kind": dict(by_kind),
            "by_arity": dict(by_arity),
            "cnot_equivalent": cnots,
            "labels": dict(self.labels),
        }


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (2 ** self.n_qubits,):
            raise ValueError("amplitude vector must have length 2**n_qubits")

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        if n_qubits > MAX_STATE_QUBITS:
            raise ValueError(f"{n_qubits} qubits exceeds the simulator cap of {MAX_STATE_QUBITS}")
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


# --- application kernels -------------------------------------------------


def _axis(n: int, q: int) -> int:
    return n - 1 - q


def _controlled_view(t: np.ndarray, n: int, controls: Controls, keep: Sequence[int]):
    """Slice away control axes; return the view and the new axis of each kept qubit."""
    idx: list = [slice(None)] * n
    for q, pol in controls:
        idx[_axis(n, q)] = pol
    view = t[tuple(idx)]
    removed = sorted(_axis(n, q) for q, _ in controls)
    axes = []
    for q in keep:
        a = _axis(n, q)
        axes.append(a - sum(1 for r in removed if r < a))
    return view, axes


def _apply_gate(t: np.ndarray, n: int, g: Gate) -> None:
    view, (ax,) = _controlled_view(t, n, g.controls, [g.target])
    if g.kind == "gphase":
        view *= np.exp(1j * g.param)
        return
    m = g.matrix()
    v = np.moveaxis(view, ax, 0)
    a0 = v[0].copy()
    a1 = v[1].copy()
    v[0] = m[0, 0] * a0 + m[0, 1] * a1
    v[1] = m[1, 0] * a0 + m[1, 1] * a1


def _gather(view: np.ndarray, axes: Sequence[int]):
    """Move ``axes`` (most significant first) to the end; return array and shape info."""
    k = len(axes)
    dest = list(range(view.ndim - k, view.ndim))
    moved = np.moveaxis(view, list(axes), dest)
    return moved, moved.shape


def _apply_block(t: np.ndarray, n: int, b: Block) -> None:
    k = len(b.targets)
    view, axes = _controlled_view(t, n, b.controls, list(reversed(b.targets)))
    moved, shape = _gather(view, axes)
    flat = moved.reshape(-1, 2 ** k)
    new = flat @ b.matrix.T
    moved[...] = new.reshape(shape)


def _apply_qft(t: np.ndarray, n: int, f: QFT) -> None:
    k = len(f.qubits)
    view, axes = _controlled_view(t, n, f.controls, list(reversed(f.qubits)))
    moved, shape = _gather(view, axes)
    flat = moved.reshape(-1, 2 ** k)
    if f.inverse_:
        new = np.fft.fft(flat, axis=1) / np.sqrt(2 ** k)
    else:
        new = np.fft.ifft(flat, axis=1) * np.sqrt(2 ** k)
    moved[...] = new.reshape(shape)


def _apply_uniform_ry(t: np.ndarray, n: int, u: UniformRy) -> None:
    r = len(u.register)
    keep = list(reversed(u.register)) + [u.target]
    view, axes = _controlled_view(t, n, u.controls, keep)
    moved, shape = _gather(view, axes)
    flat = moved.reshape(-1, 2 ** r, 2)
    half = np.asarray(u.angles, dtype=float) / 2
    c, s = np.cos(half)[None, :], np.sin(half)[None, :]
    a0 = flat[:, :, 0].copy()
    a1 = flat[:, :, 1].copy()
    new = np.empty_like(flat)
    new[:, :, 0] = c * a0 - s * a1
    new[:, :, 1] = s * a0 + c * a1
    moved[...] = new.reshape(shape)


def apply_op(state: StateVector, op: Op) -> None:
    """Apply one operation in place."""
    n = state.n_qubits
    t = state.amps.reshape((2,) * n)
    if isinstance(op, Gate):
        _apply_gate(t, n, op)
    elif isinstance(op, Block):
        _apply_block(t, n, op)
    elif isinstance(op, QFT):
        _apply_qft(t, n, op)
    else:
        _apply_uniform_ry(t, n, op)


def apply(circuit: QuantumCircuit, state: StateVector) -> StateVector:
    """Return ``U |state>`` for the circuit unitary ``U``; the input is untouched."""
    if circuit.n_qubits != state.n_qubits:
        raise ValueError(
            f"circuit acts on {circuit.n_qubits} qubits but state has {state.n_qubits}"
        )
    out = state.copy()
    for op in circuit.ops:
        apply_op(out, op)
    return out


def circuit_unitary(circuit: QuantumCircuit) -> np.ndarray:
    """Dense unitary of ``circuit``; column ``k`` is the image of basis state ``k``."""
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise ValueError(f"dense unitary capped at {MAX_UNITARY_QUBITS} qubits, got {n}")
    dim = 2 ** n
    # Simulate all basis states at once by carrying the column index as an
    # extra leading axis of a (n+1)-"qubit" state.
    big = StateVector(n + dim.bit_length() - 1, np.eye(dim, dtype=complex).T.reshape(-1))
    # Column index occupies the high qubits n..; the circuit only touches 0..n-1.
    for op in circuit.ops:
        apply_op(big, op)
    return big.amps.reshape(dim, dim).T


# --- measurement ---------------------------------------------------------


def marginal(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Marginal distribution over ``qubits`` (``qubits[0]`` is the LSB of the outcome)."""
    n = state.n_qubits
    p = state.probabilities().reshape((2,) * n)
    keep = [_axis(n, q) for q in reversed(qubits)]
    other = tuple(a for a in range(n) if a not in keep)
    p = p.sum(axis=other) if other else p
    # remaining axes are in increasing axis order; reorder to ``keep`` order
    order = sorted(keep)
    p = np.transpose(p, [order.index(a) for a in keep]) if len(keep) > 1 else p
    return np.asarray(p).reshape(-1)


def outcome_mask(n_qubits: int, pattern: dict[int, int]) -> np.ndarray:
    idx = np.arange(2 ** n_qubits)
    mask = np.ones(idx.shape, dtype=bool)
    for q, bit in pattern.items():
        mask &= ((idx >> q) & 1) == bit
    return mask


def probability(state: StateVector, pattern: dict[int, int]) -> float:
    return float(state.probabilities()[outcome_mask(state.n_qubits, pattern)].sum())


def post_select(state: StateVector, qubit: int | dict[int, int], outcome: int | None = None):
    """Project onto ``qubit == outcome`` (or a dict pattern); return (p, collapsed)."""
    pattern = qubit if isinstance(qubit, dict) else {qubit: outcome}
    mask = outcome_mask(state.n_qubits, pattern)
    amps = np.where(mask, state.amps, 0)
    p = float(np.sum(np.abs(amps) ** 2))
    if p <= 0.0:
        raise ImpossibleOutcome("impossible-outcome")
    return p, StateVector(state.n_qubits, amps / np.sqrt(p))


def sample_counts(state: StateVector, qubits: Sequence[int], shots: int, seed: int) -> dict[str, int]:
    """Multinomial shot histogram over ``qubits``; keys print ``qubits[-1]`` first."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = marginal(state, qubits)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, p)
    width = len(qubits)
    return {format(v, f"0{width}b"): int(c) for v, c in enumerate(draws) if c}


def run_ops(n_qubits: int, ops: Iterable[Op], state: StateVector | None = None) -> StateVector:
    out = StateVector.zero(n_qubits) if state is None else state.copy()
    for op in ops:
        apply_op(out, op)
    return out
