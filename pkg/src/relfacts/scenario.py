"""Registers, GHZ preparation, record interactions and the full protocol.

Every observer memory is one qubit whose ready state |R> is |0>. A record
interaction copies the eigenvalue of a system qubit (in the interaction's
basis) into the memory; ``Direction.INVERSE`` is its conjugate transpose.
"""
from __future__ import annotations

import enum
import functools
import re
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .statevec import PAULI_X, Basis, StateVector, Unitary, apply, tensor

KINDS = ("S", "A", "B", "W")
OBSERVER_KINDS = ("A", "B")

# default record basis per observer kind: A measures Y, B measures X
DEFAULT_BASIS = {"A": Basis.Y, "B": Basis.X}

_LABEL_RE = re.compile(r"^([SAB])([1-3])$|^(W)$")


@dataclass(frozen=True)
class SystemLabel:
    kind: str
    index: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind == "W":
            if self.index is not None:
                raise ValueError("W carries no index")
        elif self.index not in (1, 2, 3):
            raise ValueError(f"{self.kind} index must be 1..3, got {self.index!r}")

    @classmethod
    def parse(cls, text: str) -> SystemLabel:
        m = _LABEL_RE.match(text)
        if not m:
            raise ValueError(f"not a system label: {text!r}")
        if m.group(3):
            return cls("W")
        return cls(m.group(1), int(m.group(2)))

    @property
    def is_memory(self) -> bool:
        return self.kind in OBSERVER_KINDS

    def sort_key(self) -> tuple[int, int]:
        return KINDS.index(self.kind), self.index or 0

    def __str__(self) -> str:
        return self.kind if self.index is None else f"{self.kind}{self.index}"


def S(i: int) -> SystemLabel:
    return SystemLabel("S", i)


def A(i: int) -> SystemLabel:
    return SystemLabel("A", i)


def B(i: int) -> SystemLabel:
    return SystemLabel("B", i)


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit order: systems, then A memories, then B memories."""

    labels: tuple[SystemLabel, ...]

    def __post_init__(self) -> None:
        labels = tuple(sorted(self.labels, key=SystemLabel.sort_key))
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate label in register layout")
        if any(l.kind == "W" for l in labels):
            raise ValueError("W is a measuring agent, not a qubit")
        object.__setattr__(self, "labels", labels)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def qubit(self, label: SystemLabel) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"{label} is not in the register") from None

    def __contains__(self, label: SystemLabel) -> bool:
        return label in self.labels

    @classmethod
    def standard(cls) -> RegisterLayout:
        return cls(tuple(f(i) for f in (S, A, B) for i in (1, 2, 3)))


class Encoding(enum.Enum):
    """How a memory stores outcome l.

    literal: as the eigenvector |l> of the recorded basis, read out in that basis.
    computational: +1 -> |0>, -1 -> |1>, read out in Z.
    """

    LITERAL = "literal"
    COMPUTATIONAL = "computational"


def record_state(basis: Basis, outcome: int, encoding: Encoding) -> np.ndarray:
    if encoding is Encoding.LITERAL:
        return basis.eigenvector(outcome)
    return Basis.Z.eigenvector(outcome)


@functools.lru_cache(maxsize=None)
def record_unitary(basis: Basis, encoding: Encoding) -> Unitary:
    """U = sum_l P_l (x) V_l on (system, memory), with V_l |R> = |record(l)>."""
    if encoding is Encoding.LITERAL and basis is Basis.Z:
        raise ValueError("literal encoding has no Z record")
    u = np.zeros((4, 4), dtype=complex)
    for l in (1, -1):
        if encoding is Encoding.LITERAL:
            v = np.column_stack([record_state(basis, l, encoding), record_state(basis, -l, encoding)])
        else:
            v = np.eye(2) if l == 1 else PAULI_X.matrix
        u += np.kron(basis.projector(l), v)
    return Unitary(u)


def pointer_basis(record_basis: Basis, encoding: Encoding) -> Basis:
    """Basis in which Wigner reads a memory that recorded in ``record_basis``."""
    return record_basis if encoding is Encoding.LITERAL else Basis.Z


class Direction(enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


@dataclass(frozen=True)
class Interaction:
    agent: SystemLabel
    target: SystemLabel
    basis: Basis
    direction: Direction = Direction.FORWARD

    def __post_init__(self) -> None:
        if not self.agent.is_memory:
            raise ValueError(f"agent must be an A or B observer, got {self.agent}")
        if self.target.kind != "S":
            raise ValueError(f"target must be a system qubit, got {self.target}")
        if self.agent.index != self.target.index:
            raise ValueError(f"{self.agent} can only interact with S{self.agent.index}")

    @property
    def touches(self) -> frozenset[SystemLabel]:
        return frozenset((self.target, self.agent))

    def unitary(self, encoding: Encoding) -> Unitary:
        u = record_unitary(self.basis, encoding)
        return u if self.direction is Direction.FORWARD else u.dagger()

    def __str__(self) -> str:
        dagger = "^dag" if self.direction is Direction.INVERSE else ""
        return f"U_{self.target}{self.agent}{dagger}[{self.basis.value}]"


def inverse_of(e: Interaction) -> Interaction:
    if e.direction is not Direction.FORWARD:
        raise ValueError(f"{e} is already an inverse")
    return replace(e, direction=Direction.INVERSE)


def ghz_state(qubits: Sequence[SystemLabel]) -> StateVector:
    """(|000> + |111>)/sqrt(2) on three S qubits."""
    qubits = list(qubits)
    if len(qubits) != 3 or len(set(qubits)) != 3 or any(q.kind != "S" for q in qubits):
        raise ValueError(f"GHZ preparation needs three distinct S systems, got {[str(q) for q in qubits]}")
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = 1 / np.sqrt(2)
    return StateVector(amps)


@dataclass(frozen=True)
class Schedule:
    layout: RegisterLayout
    events: tuple[Interaction, ...]
    encoding: Encoding = Encoding.LITERAL
    ghz_systems: tuple[SystemLabel, ...] = (S(1), S(2), S(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        systems = tuple(l for l in self.layout.labels if l.kind == "S")
        if set(self.ghz_systems) != set(systems) or len(systems) != 3:
            raise ValueError("the register must hold exactly the three GHZ systems")
        for i, e in enumerate(self.events):
            for label in e.touches:
                if label not in self.layout:
                    raise ValueError(f"event {i + 1} ({e}) acts on undeclared {label}")
            if e.direction is Direction.INVERSE:
                prior = last_touching(self.events[:i], e.touches)
                if prior is None or self.events[prior] != replace(e, direction=Direction.FORWARD):
                    raise ValueError(f"event {i + 1} ({e}) does not undo the preceding interaction")

    def initial_state(self) -> StateVector:
        return tensor(ghz_state(self.ghz_systems), StateVector.zeros(self.layout.num_qubits - 3))

    def targets(self, e: Interaction) -> list[int]:
        return [self.layout.qubit(e.target), self.layout.qubit(e.agent)]

    def step(self, state: StateVector, index: int) -> StateVector:
        """Apply event ``index`` (0-based)."""
        e = self.events[index]
        return apply(state, e.unitary(self.encoding), self.targets(e))

    def run(self, upto: int | None = None) -> StateVector:
        """State after the first ``upto`` events (all by default)."""
        state = self.initial_state()
        for i in range(len(self.events) if upto is None else upto):
            state = self.step(state, i)
        return state

    def record_basis(self, memory: SystemLabel) -> Basis:
        for e in self.events:
            if e.agent == memory:
                return e.basis
        return DEFAULT_BASIS[memory.kind]


def last_touching(events: Sequence[Interaction], labels: Iterable[SystemLabel]) -> int | None:
    labels = set(labels)
    for j in range(len(events) - 1, -1, -1):
        if events[j].touches & labels:
            return j
    return None


def full_protocol(encoding: Encoding = Encoding.LITERAL) -> Schedule:
    """A records Y on every wire, then per wire: undo A, B records X."""
    records = [Interaction(A(m), S(m), Basis.Y) for m in (1, 2, 3)]
    events = list(records)
    for m in (1, 2, 3):
        events.append(inverse_of(records[m - 1]))
        events.append(Interaction(B(m), S(m), Basis.X))
    return Schedule(RegisterLayout.standard(), tuple(events), encoding)
