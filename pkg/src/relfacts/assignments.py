"""Absolute +/-1 valuations of the six friend outcomes and parity constraints."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from .perspective import Context, exact_distribution

LABELS = ("A1", "A2", "A3", "B1", "B2", "B3")


@dataclass(frozen=True)
class Assignment:
    """Total map from LABELS to +/-1, stored in LABELS order."""

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        values = tuple(self.values)
        if len(values) != len(LABELS) or any(v not in (1, -1) for v in values):
            raise ValueError(f"an assignment gives +1 or -1 to each of {LABELS}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, int]) -> Assignment:
        if set(mapping) != set(LABELS):
            raise ValueError(f"assignment must cover exactly {LABELS}")
        return cls(tuple(mapping[l] for l in LABELS))

    def __getitem__(self, label: str) -> int:
        return self.values[LABELS.index(label)]

    def as_dict(self) -> dict[str, int]:
        return dict(zip(LABELS, self.values))


@dataclass(frozen=True)
class Constraint:
    labels: tuple[str, str, str]
    parity: int
    name: str = ""

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        if len(labels) != 3 or len(set(labels)) != 3:
            raise ValueError(f"a constraint needs three distinct labels, got {labels}")
        unknown = [l for l in labels if l not in LABELS]
        if unknown:
            raise ValueError(f"unknown outcome label(s) {unknown}")
        if self.parity not in (1, -1):
            raise ValueError(f"parity must be +1 or -1, got {self.parity!r}")
        object.__setattr__(self, "labels", labels)

    def __str__(self) -> str:
        body = f"{'*'.join(self.labels)} = {self.parity:+d}"
        return f"({self.name}) {body}" if self.name else body


def ghz_constraints() -> list[Constraint]:
    return [
        Constraint(("B1", "B2", "B3"), 1, "i"),
        Constraint(("B1", "A2", "A3"), -1, "ii"),
        Constraint(("A1", "B2", "A3"), -1, "iii"),
        Constraint(("A1", "A2", "B3"), -1, "iv"),
    ]


def satisfies(a: Assignment, c: Constraint) -> bool:
    return math.prod(a[l] for l in c.labels) == c.parity


def all_assignments() -> list[Assignment]:
    """All 64 assignments, lexicographic over LABELS with +1 before -1."""
    return [Assignment(v) for v in itertools.product((1, -1), repeat=len(LABELS))]


def enumerate_satisfying(cs: Sequence[Constraint]) -> list[Assignment]:
    return [a for a in all_assignments() if all(satisfies(a, c) for c in cs)]


@dataclass(frozen=True)
class ParityCertificate:
    """Constraints whose equations multiply to 1 = -1."""

    constraints: tuple[Constraint, ...]

    @property
    def label_counts(self) -> dict[str, int]:
        return dict(Counter(l for c in self.constraints for l in c.labels))

    @property
    def parity_product(self) -> int:
        return math.prod(c.parity for c in self.constraints)

    def explain(self) -> str:
        counts = ", ".join(f"{l}x{n}" for l, n in sorted(self.label_counts.items()))
        return (
            f"multiplying {len(self.constraints)} constraints gives every label an even power "
            f"({counts}) so the left side is +1, but the parities multiply to {self.parity_product:+d}"
        )


def parity_witness(cs: Sequence[Constraint]) -> ParityCertificate | None:
    """Smallest sub-multiset with even label counts and parity product -1."""
    for size in range(1, len(cs) + 1):
        for subset in itertools.combinations(cs, size):
            counts = Counter(l for c in subset for l in c.labels)
            if all(n % 2 == 0 for n in counts.values()) and math.prod(c.parity for c in subset) == -1:
                return ParityCertificate(subset)
    return None


@dataclass(frozen=True)
class CrossCheckRow:
    constraint: Constraint
    context: str
    passed: bool


@dataclass(frozen=True)
class CrossCheckReport:
    rows: tuple[CrossCheckRow, ...]
    satisfying_count: int

    @property
    def satisfiable(self) -> bool:
        return self.satisfying_count > 0


def memory_labels(c: Context) -> dict[str, int]:
    """Position of each measured memory (by its friend label, e.g. 'B1') in c's tuples."""
    return {str(t): i for i, t in enumerate(c.targets)}


def cross_check(cs: Sequence[Constraint], contexts: Sequence[Context]) -> CrossCheckReport:
    """Check each constraint on the support of the context that reads its labels.

    A PASS says only that this context's outcomes obey this constraint.
    """
    if len(cs) != len(contexts):
        raise ValueError(f"{len(cs)} constraints paired with {len(contexts)} contexts")
    rows = []
    for c, ctx in zip(cs, contexts):
        positions = memory_labels(ctx)
        missing = [l for l in c.labels if l not in positions]
        if missing:
            raise ValueError(f"context {ctx.name} does not read {missing} needed by constraint {c}")
        support = exact_distribution(ctx).support()
        ok = all(math.prod(t[positions[l]] for l in c.labels) == c.parity for t in support)
        rows.append(CrossCheckRow(c, ctx.name, ok))
    return CrossCheckReport(tuple(rows), len(enumerate_satisfying(cs)))


def pair_contexts(cs: Sequence[Constraint], contexts: Sequence[Context]) -> list[Context | None]:
    """For each constraint, the first context reading exactly its three labels."""
    pairs = []
    for c in cs:
        match = next((ctx for ctx in contexts if set(memory_labels(ctx)) == set(c.labels)), None)
        pairs.append(match)
    return pairs
