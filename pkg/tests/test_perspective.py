import math
from dataclasses import replace

import numpy as np
import pytest

from oracles import ghz_product_distribution
from relfacts.perspective import (
    Context,
    JointDistribution,
    OutcomeRecord,
    PointerMeasurement,
    builtin_contexts,
    exact_distribution,
    late_readout_context,
    product_expectation,
    repeatability_check,
    sample,
)
from relfacts.scenario import A, B, Encoding, S, Schedule, full_protocol

TOL = 1e-12
PAULI_TRIPLES = {"C1": "XXX", "C2": "XYY", "C3": "YXY", "C4": "YYX"}
CONSTRAINT_VALUE = {"C1": 1, "C2": -1, "C3": -1, "C4": -1}


def by_name(encoding=Encoding.LITERAL):
    return {c.name: c for c in builtin_contexts(encoding)}


class TestBuiltins:
    def test_count(self):
        assert len(builtin_contexts()) == 4

    def test_labels(self):
        ctx = by_name()
        assert ctx["C1"].labels == ("B1^W", "B2^W", "B3^W")
        assert ctx["C2"].labels == ("B1^W", "A2^W", "A3^W")
        assert ctx["C3"].labels == ("A1^W", "B2^W", "A3^W")
        assert ctx["C4"].labels == ("A1^W", "A2^W", "B3^W")

    def test_a_readings_precede_their_undo(self):
        for c in builtin_contexts():
            for m in c.measurements:
                if m.target.kind == "A":
                    undo = next(i for i, e in enumerate(c.schedule.events) if e.agent == m.target and i >= 3)
                    assert 3 <= m.insert_after <= undo


class TestExactDistribution:
    @pytest.mark.parametrize("name", ["C1", "C2", "C3", "C4"])
    def test_matches_bare_ghz_projection(self, name, encoding):
        dist = exact_distribution(by_name(encoding)[name])
        oracle = ghz_product_distribution(PAULI_TRIPLES[name])
        assert abs(sum(p for _, p in dist.entries) - 1) < TOL
        for t, p in dist.entries:
            assert p == pytest.approx(oracle[t], abs=TOL)

    def test_c1_support(self):
        dist = exact_distribution(by_name()["C1"])
        assert sorted(dist.support()) == sorted([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)])
        for t in dist.support():
            assert dist.probability(t) == pytest.approx(0.25, abs=TOL)

    @pytest.mark.parametrize("name", ["C1", "C2", "C3", "C4"])
    def test_products_deterministic(self, name):
        dist = exact_distribution(by_name()[name])
        assert dist.products() == {CONSTRAINT_VALUE[name]}

    def test_single_b1_reading(self):
        schedule = full_protocol()
        c = Context("B1 only", schedule, (PointerMeasurement(B(1), 5, "B1^W"),))
        dist = exact_distribution(c)
        assert dist.entries[0][0] == (1,) and dist.entries[1][0] == (-1,)
        assert dist.entries[0][1] == pytest.approx(0.5, abs=TOL)
        assert dist.entries[1][1] == pytest.approx(0.5, abs=TOL)

    def test_tuple_order_is_lexicographic(self):
        dist = exact_distribution(by_name()["C2"])
        assert [t for t, _ in dist.entries] == sorted((t for t, _ in dist.entries), reverse=True)

    def test_distribution_invariant(self):
        with pytest.raises(ValueError):
            JointDistribution(("x",), (((1,), 0.5), ((-1,), 0.4)))


class TestContextValidation:
    def test_insertion_out_of_bounds(self):
        with pytest.raises(ValueError):
            Context("bad", full_protocol(), (PointerMeasurement(B(1), 10, "B1^W"),))

    def test_duplicate_labels(self):
        with pytest.raises(ValueError):
            Context("bad", full_protocol(), (PointerMeasurement(B(1), 9, "x"), PointerMeasurement(B(2), 9, "x")))

    def test_measured_twice(self):
        with pytest.raises(ValueError):
            Context("bad", full_protocol(), (PointerMeasurement(B(1), 5, "a"), PointerMeasurement(B(1), 9, "b")))

    def test_system_qubit_not_a_pointer(self):
        with pytest.raises(ValueError):
            PointerMeasurement(S(1), 0, "S1^W")

    def test_outcome_record(self):
        assert OutcomeRecord("B1^W", -1).value == -1
        with pytest.raises(ValueError):
            OutcomeRecord("B1^W", 0)


class TestExpectation:
    @pytest.mark.parametrize("name", ["C1", "C2", "C3", "C4"])
    def test_values(self, name, encoding):
        assert product_expectation(by_name(encoding)[name]) == pytest.approx(CONSTRAINT_VALUE[name], abs=TOL)

    def test_late_readout_is_zero(self, encoding):
        late = late_readout_context(encoding)
        assert product_expectation(late) == pytest.approx(0, abs=TOL)
        assert exact_distribution(late).products() == {1, -1}

    def test_late_literal_readout_is_uniform(self):
        # A memories are back in |R> = |0>, read in Y: unbiased and uncorrelated
        dist = exact_distribution(late_readout_context(Encoding.LITERAL))
        for _, p in dist.entries:
            assert p == pytest.approx(1 / 8, abs=TOL)


class TestRobustness:
    @pytest.mark.parametrize("name", ["C2", "C3", "C4"])
    def test_moving_a_reading_within_legal_range(self, name, encoding):
        c = by_name(encoding)[name]
        reference = exact_distribution(c)
        for i, m in enumerate(c.measurements):
            events = c.schedule.events
            lo = m.insert_after
            while lo > 0 and m.target not in events[lo - 1].touches:
                lo -= 1
            hi = m.insert_after
            while hi < len(events) and m.target not in events[hi].touches:
                hi += 1
            for point in range(lo, hi + 1):
                moved = list(c.measurements)
                moved[i] = replace(m, insert_after=point)
                dist = exact_distribution(replace(c, measurements=tuple(moved)))
                for (t1, p1), (t2, p2) in zip(reference.entries, dist.entries):
                    assert t1 == t2 and abs(p1 - p2) < TOL

    @pytest.mark.parametrize("name", ["C2", "C3", "C4"])
    def test_trailing_b_interactions_irrelevant(self, name, encoding):
        c = by_name(encoding)[name]
        last = max(m.insert_after for m in c.measurements)
        truncated = Schedule(c.schedule.layout, c.schedule.events[:last], encoding)
        short = Context(name, truncated, c.measurements)
        for (t1, p1), (t2, p2) in zip(exact_distribution(c).entries, exact_distribution(short).entries):
            assert t1 == t2 and abs(p1 - p2) < TOL


class TestSample:
    def test_deterministic_products(self):
        ctx = by_name()
        assert all(math.prod(t) == 1 for t in sample(ctx["C1"], 10000, 12345))
        assert all(math.prod(t) == -1 for t in sample(ctx["C2"], 10000, 999))

    def test_reproducible(self):
        c = by_name()["C3"]
        assert sample(c, 500, 7) == sample(c, 500, 7)
        assert sample(c, 500, 7) != sample(c, 500, 8)

    def test_frozen_stream(self):
        # PCG64(0) uniforms 0.637, 0.270, 0.041, 0.017, 0.813 through the
        # 1/4-per-tuple CDF over C1's support in lexicographic order
        assert sample(by_name()["C1"], 5, 0) == [(-1, 1, -1), (1, -1, -1), (1, 1, 1), (1, 1, 1), (-1, -1, 1)]

    def test_bad_arguments(self):
        c = by_name()["C1"]
        with pytest.raises(ValueError):
            sample(c, 0, 1)
        with pytest.raises(ValueError):
            sample(c, 1, -1)
        with pytest.raises(ValueError):
            sample(c, 1, 1 << 64)

    @pytest.mark.parametrize("context", [*builtin_contexts(), late_readout_context()], ids=lambda c: c.name)
    def test_frequencies_within_three_sigma(self, context):
        shots = 100_000
        draws = sample(context, shots, 2024)
        counts = {}
        for t in draws:
            counts[t] = counts.get(t, 0) + 1
        for t, p in exact_distribution(context).entries:
            sigma = math.sqrt(shots * p * (1 - p))
            assert abs(counts.get(t, 0) - shots * p) <= 3 * sigma + 1e-9


class TestRepeatability:
    @pytest.mark.parametrize("name", ["C1", "C2", "C3", "C4"])
    def test_every_reading(self, name, encoding):
        c = by_name(encoding)[name]
        for t in c.targets:
            assert repeatability_check(c, t)

    def test_delayed_repeat_without_touch(self):
        assert repeatability_check(by_name()["C1"], B(1), after=9)
        assert repeatability_check(by_name()["C2"], B(1), after=9)

    def test_intervening_undo_rejected(self):
        with pytest.raises(ValueError):
            repeatability_check(by_name()["C2"], A(2), after=6)

    def test_unmeasured_target(self):
        with pytest.raises(ValueError):
            repeatability_check(by_name()["C1"], A(1))
