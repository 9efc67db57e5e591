import statistics

import pytest
from hypothesis import given, strategies as st

from fleetbench.timing import (AllDeltasZero, BudgetExceeded, Harness, MeasurePlan, MockClock,
                               PerfCounterClock, PlanError, TimerProfile, ValueSink,
                               calibrate_timer, measure, measure_ns_per_iter)


class ChargingBody:
    """Advances a mock clock by ``ns`` per iteration."""

    def __init__(self, clock, ns):
        self.clock, self.ns = clock, ns

    def __call__(self, n):
        self.clock.advance(self.ns * n)
        return n


def test_calibrate_fixed_step():
    p = calibrate_timer(MockClock(step_ns=100), samples=100)
    assert p.resolution_ns == 100
    assert p.read_overhead_ns == 100


def test_calibrate_frozen_clock():
    with pytest.raises(AllDeltasZero):
        calibrate_timer(MockClock(step_ns=0), samples=100)


def test_calibrate_needs_samples():
    with pytest.raises(ValueError):
        calibrate_timer(MockClock(step_ns=1), samples=99)


def test_profile_validation():
    with pytest.raises(ValueError):
        TimerProfile(0, 0)
    with pytest.raises(ValueError):
        TimerProfile(1, -1)


@pytest.mark.parametrize("reps", [0, 1, 2, 4])
def test_plan_needs_odd_repetitions(reps):
    with pytest.raises(PlanError):
        MeasurePlan(repetitions=reps)


def test_plan_duration_vs_resolution():
    profile = TimerProfile(resolution_ns=1000, read_overhead_ns=0)
    with pytest.raises(PlanError):
        MeasurePlan(min_duration_ns=99_999).check(profile)
    MeasurePlan(min_duration_ns=100_000).check(profile)


def test_mock_two_ns_per_iteration():
    clock = MockClock(step_ns=0)
    profile = TimerProfile(resolution_ns=1, read_overhead_ns=0)
    plan = MeasurePlan(min_duration_ns=1000)
    assert measure_ns_per_iter(clock, plan, ChargingBody(clock, 2), profile) == 2.0


def test_mock_overhead_subtracted_once_per_batch():
    h = Harness.mock(lambda key: 2.0, step_ns=5)
    t = h.measure(lambda n: n)
    assert t.ns_per_iter == 2.0
    assert not t.clamped


def test_budget_exceeded():
    clock = MockClock(step_ns=1)
    profile = TimerProfile(1, 1)
    with pytest.raises(BudgetExceeded):
        measure(clock, MeasurePlan(min_duration_ns=10**12, max_iterations=1),
                lambda n: n, profile)


class Scripted:
    """Charges a scripted cost per call: warm-up, growth, then timed batches."""

    def __init__(self, clock, costs):
        self.clock, self.costs, self.calls = clock, list(costs), 0

    def __call__(self, n):
        cost = self.costs[min(self.calls, len(self.costs) - 1)]
        self.calls += 1
        self.clock.advance(cost * n)
        return n


def test_negative_residual_clamped():
    clock = MockClock(step_ns=0)
    profile = TimerProfile(resolution_ns=1, read_overhead_ns=10)
    plan = MeasurePlan(min_duration_ns=100)
    t = measure(clock, plan, Scripted(clock, [0, 500, 0]), profile)
    assert t.iterations == 1
    assert t.clamped
    assert t.ns_per_iter == 0.0


def test_sink_sees_every_batch():
    clock = MockClock()
    sink = ValueSink()
    plan = MeasurePlan(min_duration_ns=128, repetitions=3)
    measure(clock, plan, ChargingBody(clock, 1), TimerProfile(1, 0), sink)
    # warm-up + 8 growth batches (1..128) + 3 timed
    assert sink.count == 1 + 8 + 3
    assert sink.last == 128


def test_mock_determinism():
    def run():
        h = Harness.mock(lambda key: 3.25, step_ns=2)
        return [h.measure(lambda n: n, units_per_iter=u).batches for u in (1, 4, 16)]

    assert run() == run()


def test_clock_monotonic():
    for clock in (PerfCounterClock(), MockClock(step_ns=3)):
        readings = [clock.now() for _ in range(1000)]
        assert all(b >= a for a, b in zip(readings, readings[1:]))


def test_mock_clock_rejects_backwards():
    with pytest.raises(ValueError):
        MockClock().advance(-1)
    with pytest.raises(ValueError):
        MockClock(step_ns=-1)


@given(st.lists(st.floats(0.5, 100), min_size=3, max_size=3), st.integers(0, 2))
def test_median_insensitive_to_one_outlier(costs, victim):
    def run(timed):
        clock = MockClock()
        plan = MeasurePlan(min_duration_ns=1000, repetitions=3)
        return measure(clock, plan, Scripted(clock, [0, 2000, *timed]),
                       TimerProfile(1, 0)).ns_per_iter

    base = run(costs)
    assert base == pytest.approx(statistics.median(costs), rel=1e-9)
    spoiled_costs = list(costs)
    spoiled_costs[victim] *= 10
    spoiled = run(spoiled_costs)
    others = sorted(c for j, c in enumerate(costs) if j != victim)
    # the spoiled median stays between the two untouched batches
    assert others[0] * (1 - 1e-9) <= spoiled <= others[1] * (1 + 1e-9)


@given(st.floats(0, 1e4), st.integers(1, 64), st.floats(0.01, 50))
def test_result_never_negative(overhead, step, cost):
    clock = MockClock(step_ns=step)
    t = measure(clock, MeasurePlan(min_duration_ns=1000), ChargingBody(clock, cost),
                TimerProfile(1, overhead))
    assert t.ns_per_iter >= 0


@pytest.mark.hardware
def test_real_calibrations_agree():
    a = calibrate_timer(PerfCounterClock(), 2000)
    b = calibrate_timer(PerfCounterClock(), 2000)
    assert 0.5 <= a.read_overhead_ns / b.read_overhead_ns <= 2.0
