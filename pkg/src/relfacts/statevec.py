"""Dense complex statevector engine.

Qubit 0 is the most significant bit of the amplitude index. All values are
immutable once built; every operation returns a new object.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TOL = 1e-12

_SQRT2_INV = 1 / np.sqrt(2.0)


class Basis(enum.Enum):
    """Single-qubit Pauli eigenbasis. Outcome +1 is the first listed vector."""

    X = "X"
    Y = "Y"
    Z = "Z"

    @property
    def eigenvectors(self) -> tuple[np.ndarray, np.ndarray]:
        return _EIGENVECTORS[self]

    def eigenvector(self, outcome: int) -> np.ndarray:
        plus, minus = self.eigenvectors
        if outcome == 1:
            return plus
        if outcome == -1:
            return minus
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")

    def projector(self, outcome: int) -> np.ndarray:
        if outcome not in (1, -1):
            raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
        # (I + l*sigma)/2 keeps entries exact
        return (np.eye(2) + outcome * self.observable) / 2

    @property
    def observable(self) -> np.ndarray:
        return _PAULIS[self]


def _vec(*entries: complex) -> np.ndarray:
    v = np.array(entries, dtype=complex)
    v.setflags(write=False)
    return v


_EIGENVECTORS = {
    Basis.X: (_vec(_SQRT2_INV, _SQRT2_INV), _vec(_SQRT2_INV, -_SQRT2_INV)),
    Basis.Y: (_vec(_SQRT2_INV, 1j * _SQRT2_INV), _vec(_SQRT2_INV, -1j * _SQRT2_INV)),
    Basis.Z: (_vec(1, 0), _vec(0, 1)),
}


_PAULIS = {
    Basis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Basis.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Basis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in _PAULIS.values():
    _m.setflags(write=False)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over ``num_qubits`` qubits."""

    amps: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen(self.amps).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size == 0 or 1 << n != amps.size:
            raise ValueError(f"amplitude count {amps.size} is not a power of 2")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amps", amps)

    @property
    def num_qubits(self) -> int:
        return self.amps.size.bit_length() - 1

    @classmethod
    def normalized(cls, amps) -> StateVector:
        amps = np.asarray(amps, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    @classmethod
    def zeros(cls, num_qubits: int) -> StateVector:
        """The all-|0> state."""
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[0] = 1
        return cls(amps)

    @classmethod
    def from_bits(cls, bits: str) -> StateVector:
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2) if bits else 0] = 1
        return cls(amps)

    @classmethod
    def eigenstate(cls, basis: Basis, outcome: int) -> StateVector:
        return cls(basis.eigenvector(outcome))

    def fidelity(self, other: StateVector) -> float:
        """|<self|other>|^2; insensitive to global phase."""
        if other.num_qubits != self.num_qubits:
            raise ValueError("fidelity between states of different size")
        return float(abs(np.vdot(self.amps, other.amps)) ** 2)

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"unitary must be square, got shape {m.shape}")
        dim = m.shape[0]
        if dim == 0 or dim & (dim - 1):
            raise ValueError(f"unitary dimension {dim} is not a power of 2")
        if not np.all(np.isfinite(m)):
            raise ValueError("unitary entries must be finite")
        err = np.max(np.abs(m.conj().T @ m - np.eye(dim)))
        if err > TOL:
            raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def dagger(self) -> Unitary:
        return Unitary(self.matrix.conj().T)

    @classmethod
    def identity(cls, num_qubits: int) -> Unitary:
        return cls(np.eye(1 << num_qubits))


PAULI_X = Unitary(np.array([[0, 1], [1, 0]]))


@dataclass(frozen=True)
class Outcome:
    """One branch of a projective measurement.

    ``usable`` is False for zero-probability branches, whose ``post_state``
    is only a normalized placeholder.
    """

    outcome: int
    probability: float
    post_state: StateVector
    usable: bool = True


@dataclass(frozen=True)
class OutcomeDistribution:
    entries: tuple[Outcome, ...]

    def __post_init__(self) -> None:
        total = sum(e.probability for e in self.entries)
        if abs(total - 1.0) > TOL:
            raise ValueError(f"outcome probabilities sum to {total!r}")

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, outcome: int) -> Outcome:
        for e in self.entries:
            if e.outcome == outcome:
                return e
        raise KeyError(outcome)

    def probability(self, outcome: int) -> float:
        return self[outcome].probability


def _check_targets(num_qubits: int, targets: Sequence[int]) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits in {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise ValueError(f"qubit {t} out of range for {num_qubits}-qubit state")
    return targets


def _apply_matrix(amps: np.ndarray, n: int, matrix: np.ndarray, targets: list[int]) -> np.ndarray:
    k = len(targets)
    psi = amps.reshape((2,) * n)
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    return out.reshape(-1)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    return StateVector(np.kron(a.amps, b.amps))


def apply(state: StateVector, u: Unitary, targets: Sequence[int]) -> StateVector:
    """Apply ``u`` to ``targets`` (targets[0] is the most significant bit of u)."""
    targets = _check_targets(state.num_qubits, targets)
    if u.dim != 1 << len(targets):
        raise ValueError(f"unitary of dim {u.dim} does not act on {len(targets)} qubit(s)")
    return StateVector(_apply_matrix(state.amps, state.num_qubits, u.matrix, targets))


def measure(state: StateVector, qubit: int, basis: Basis) -> OutcomeDistribution:
    """Born-rule measurement of one qubit in ``basis``."""
    (qubit,) = _check_targets(state.num_qubits, [qubit])
    entries = []
    for outcome in (1, -1):
        projected = _apply_matrix(state.amps, state.num_qubits, basis.projector(outcome), [qubit])
        p = float(np.vdot(projected, projected).real)
        if p > TOL:
            entries.append(Outcome(outcome, p, StateVector(projected / np.sqrt(p))))
        else:
            entries.append(Outcome(outcome, 0.0, state, usable=False))
    return OutcomeDistribution(tuple(entries))


def expectation_product(state: StateVector, obs: Sequence[tuple[int, Basis]]) -> float:
    """Expectation of a tensor product of single-qubit Pauli observables."""
    qubits = _check_targets(state.num_qubits, [q for q, _ in obs])
    amps = state.amps
    for q, (_, basis) in zip(qubits, obs):
        amps = _apply_matrix(amps, state.num_qubits, basis.observable, [q])
    value = np.vdot(state.amps, amps)
    if abs(value.imag) > TOL:
        raise ArithmeticError(f"expectation has imaginary part {value.imag!r}")
    return float(value.real)


def reduced_density_matrix(state: StateVector, qubit: int) -> np.ndarray:
    """2x2 reduced density matrix of one qubit (partial trace over the rest)."""
    (qubit,) = _check_targets(state.num_qubits, [qubit])
    psi = np.moveaxis(state.amps.reshape((2,) * state.num_qubits), qubit, 0).reshape(2, -1)
    return psi @ psi.conj().T


def qubit_fidelity(state: StateVector, qubit: int, ket) -> float:
    """<ket| rho_qubit |ket> for a pure single-qubit reference ``ket``."""
    ket = np.asarray(ket, dtype=complex)
    rho = reduced_density_matrix(state, qubit)
    return float(np.vdot(ket, rho @ ket).real)
