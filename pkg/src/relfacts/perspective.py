"""Wigner's measurement contexts and their exact outcome statistics.

A context is a schedule plus pointer measurements inserted between events.
Each measurement collapses the global state and forks the run, so the joint
distribution is built by exhaustive branching in schedule order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .scenario import A, B, Encoding, Schedule, SystemLabel, full_protocol, pointer_basis
from .statevec import TOL, StateVector, measure


@dataclass(frozen=True)
class PointerMeasurement:
    target: SystemLabel
    insert_after: int
    label: str

    def __post_init__(self) -> None:
        if not self.target.is_memory:
            raise ValueError(f"Wigner can only read observer memories, not {self.target}")
        if self.insert_after < 0:
            raise ValueError("insert_after must be >= 0")


@dataclass(frozen=True)
class OutcomeRecord:
    label: str
    value: int

    def __post_init__(self) -> None:
        if self.value not in (1, -1):
            raise ValueError(f"outcome must be +1 or -1, got {self.value!r}")


@dataclass(frozen=True)
class Context:
    name: str
    schedule: Schedule
    measurements: tuple[PointerMeasurement, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "measurements", tuple(self.measurements))
        _check_measurements(self.schedule, self.measurements)
        labels = [m.label for m in self.measurements]
        if len(set(labels)) != len(labels):
            raise ValueError(f"context {self.name}: duplicate outcome label")
        targets = [m.target for m in self.measurements]
        if len(set(targets)) != len(targets):
            raise ValueError(f"context {self.name}: a memory is measured more than once")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.measurements)

    @property
    def targets(self) -> tuple[SystemLabel, ...]:
        return tuple(m.target for m in self.measurements)


def _check_measurements(schedule: Schedule, measurements: Sequence[PointerMeasurement]) -> None:
    n = len(schedule.events)
    for m in measurements:
        if m.insert_after > n:
            raise ValueError(f"{m.label}: insertion point {m.insert_after} beyond the {n} events")
        if m.target not in schedule.layout:
            raise ValueError(f"{m.label}: {m.target} is not in the register")


@dataclass(frozen=True)
class JointDistribution:
    """Probabilities of every +/-1 tuple, in lexicographic order with +1 first."""

    labels: tuple[str, ...]
    entries: tuple[tuple[tuple[int, ...], float], ...]

    def __post_init__(self) -> None:
        total = sum(p for _, p in self.entries)
        if abs(total - 1.0) > TOL:
            raise ValueError(f"joint probabilities sum to {total!r}")

    def support(self) -> list[tuple[int, ...]]:
        return [t for t, p in self.entries if p > TOL]

    def probability(self, outcomes: tuple[int, ...]) -> float:
        return dict(self.entries).get(tuple(outcomes), 0.0)

    def expectation(self) -> float:
        return sum(math.prod(t) * p for t, p in self.entries)

    def products(self) -> set[int]:
        return {math.prod(t) for t in self.support()}


def _evaluate(schedule: Schedule, measurements: Sequence[PointerMeasurement]) -> JointDistribution:
    order = sorted(range(len(measurements)), key=lambda i: measurements[i].insert_after)
    by_point: dict[int, list[int]] = {}
    for i in order:
        by_point.setdefault(measurements[i].insert_after, []).append(i)

    k = len(measurements)
    # each branch: (probability, state, outcomes keyed by measurement position)
    branches: list[tuple[float, StateVector, dict[int, int]]] = [(1.0, schedule.initial_state(), {})]
    for point in range(len(schedule.events) + 1):
        if point > 0:
            branches = [(p, schedule.step(s, point - 1), o) for p, s, o in branches]
        for i in by_point.get(point, ()):
            m = measurements[i]
            qubit = schedule.layout.qubit(m.target)
            basis = pointer_basis(schedule.record_basis(m.target), schedule.encoding)
            forked = []
            for p, s, o in branches:
                for branch in measure(s, qubit, basis):
                    if branch.usable:
                        forked.append((p * branch.probability, branch.post_state, {**o, i: branch.outcome}))
            branches = forked

    probs = {t: 0.0 for t in itertools.product((1, -1), repeat=k)}
    for p, _, o in branches:
        probs[tuple(o[i] for i in range(k))] += p
    return JointDistribution(tuple(m.label for m in measurements), tuple(probs.items()))


def exact_distribution(c: Context) -> JointDistribution:
    return _evaluate(c.schedule, c.measurements)


def product_expectation(c: Context) -> float:
    return exact_distribution(c).expectation()


def sample(c: Context, shots: int, seed: int) -> list[tuple[int, ...]]:
    """Draw ``shots`` i.i.d. tuples from the exact distribution.

    Uses numpy's PCG64 bit generator seeded with ``seed``. Each shot takes one
    raw 64-bit word ``w`` and maps the double ``(w >> 11) * 2**-53`` through
    the cumulative distribution.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if seed < 0 or seed >= 1 << 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    dist = exact_distribution(c)
    tuples = [t for t, _ in dist.entries]
    cdf = np.cumsum([p if p > TOL else 0.0 for _, p in dist.entries])
    last = max(i for i, (_, p) in enumerate(dist.entries) if p > TOL)
    cdf = cdf / cdf[-1]
    cdf[last:] = 1.0
    raw = np.random.PCG64(seed).random_raw(shots)
    uniforms = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
    idx = np.searchsorted(cdf, uniforms, side="right")
    return [tuples[i] for i in idx]


def repeatability_check(c: Context, target: SystemLabel, after: int | None = None) -> bool:
    """Repeat the pointer measurement of ``target`` and test the two agree.

    The duplicate goes right after the original, or after event ``after``
    if given; no event may touch the memory in between.
    """
    matches = [m for m in c.measurements if m.target == target]
    if not matches:
        raise ValueError(f"{target} is not measured in context {c.name}")
    first = matches[0]
    point = first.insert_after if after is None else after
    if point < first.insert_after:
        raise ValueError("the repeat must come after the original measurement")
    for j in range(first.insert_after, point):
        if target in c.schedule.events[j].touches:
            raise ValueError(f"event {j + 1} ({c.schedule.events[j]}) touches {target} between the two readings")
    repeat = replace(first, insert_after=point, label=first.label + "'")
    pos = c.measurements.index(first)
    extended = list(c.measurements)
    extended.insert(pos + 1, repeat)
    _check_measurements(c.schedule, extended)
    dist = _evaluate(c.schedule, extended)
    disagree = sum(p for t, p in dist.entries if t[pos] != t[pos + 1])
    return disagree <= TOL


def builtin_contexts(encoding: Encoding = Encoding.LITERAL) -> list[Context]:
    """The four contexts whose products realize the GHZ constraints.

    C1 reads every B memory at the end. In C2..C4 one B memory is read right
    after its record, and the other two A memories right after the three A
    records, before any undo on those wires.
    """
    schedule = full_protocol(encoding)
    a_done = 3
    b_done = {1: 5, 2: 7, 3: 9}  # event count once B_m has recorded
    contexts = [
        Context("C1", schedule, tuple(PointerMeasurement(B(m), b_done[3], f"B{m}^W") for m in (1, 2, 3))),
    ]
    for k in (1, 2, 3):
        ms = []
        for m in (1, 2, 3):
            if m == k:
                ms.append(PointerMeasurement(B(m), b_done[m], f"B{m}^W"))
            else:
                ms.append(PointerMeasurement(A(m), a_done, f"A{m}^W"))
        contexts.append(Context(f"C{k + 1}", schedule, tuple(ms)))
    return contexts


def late_readout_context(encoding: Encoding = Encoding.LITERAL) -> Context:
    """C2's readings, but with the A memories read after the whole protocol."""
    schedule = full_protocol(encoding)
    end = len(schedule.events)
    return Context(
        "C2-late",
        schedule,
        (
            PointerMeasurement(B(1), end, "B1^W"),
            PointerMeasurement(A(2), end, "A2^W"),
            PointerMeasurement(A(3), end, "A3^W"),
        ),
    )
